"""``graphflow`` command line: run, gen, simulate, locate, validate."""

import argparse
import os
import sys

from .diffusion import DiffusionConfig, simulate
from .exceptions import GraphflowError
from .graph import GraphGenSpec, generate, read_graph, write_graph
from .runner import expand_spec, format_summary, load_config, run_experiments, write_outputs, write_trace_json
from .sl import SL_METHODS, Observation, locate

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _id_list(text):
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated node ids, got {text!r}") from None


def _read_ids(path):
    ids = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                ids.append(int(line))
            except ValueError:
                raise GraphflowError(f"{path}: line {lineno}: expected a node id, got {line!r}") from None
    return ids


def build_parser():
    parser = _Parser(prog="graphflow", description="Diffusion, influence and source-localization experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="execute an experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--parallelism", type=int, default=1)
    run.add_argument("--out-dir", default=None, help="defaults to $GRAPHFLOW_OUT_DIR, else the current directory")

    gen = sub.add_parser("gen", help="generate a random graph as an edge list")
    gen.add_argument("--kind", required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--k", type=int)
    gen.add_argument("--p", type=float)
    gen.add_argument("--m", type=int)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    sim = sub.add_parser("simulate", help="run one diffusion and optionally save its trace")
    sim.add_argument("--graph", required=True)
    sim.add_argument("--directed", action="store_true")
    sim.add_argument("--model", required=True, help="ic, lt, si or sir")
    sim.add_argument("--p", type=float)
    sim.add_argument("--beta", type=float)
    sim.add_argument("--gamma", type=float)
    sim.add_argument("--seeds", type=_id_list, required=True)
    sim.add_argument("--steps", type=int, default=100)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--trace")

    loc = sub.add_parser("locate", help="predict diffusion sources from an infected set")
    loc.add_argument("--graph", required=True)
    loc.add_argument("--directed", action="store_true")
    loc.add_argument("--infected", required=True, help="file with one node id per line")
    loc.add_argument("--method", choices=SL_METHODS, default="jordan")
    loc.add_argument("--sources", type=int, default=1)

    val = sub.add_parser("validate", help="check an experiment config without running it")
    val.add_argument("--config", required=True)
    return parser


def _cmd_run(args):
    spec = load_config(args.config)
    records = run_experiments(spec, args.parallelism)
    out_dir = args.out_dir or os.environ.get("GRAPHFLOW_OUT_DIR", ".")
    for path in write_outputs(spec, records, out_dir):
        print(path)
    print(format_summary(records), end="")
    return EXIT_FAILED if any(r.failed for r in records) else EXIT_OK


def _cmd_gen(args):
    spec = GraphGenSpec(args.kind, args.n, p=args.p, k=args.k, m=args.m)
    graph = generate(spec, args.seed)
    write_graph(graph, args.out)
    print(f"{spec.label}: {graph.node_count} nodes, {graph.edge_count} edges -> {args.out}")
    return EXIT_OK


def _cmd_simulate(args):
    graph = read_graph(args.graph, args.directed)
    config = DiffusionConfig(args.model, p=args.p, beta=args.beta, gamma=args.gamma, max_steps=args.steps)
    trace = simulate(graph, config, args.seeds, args.seed)
    if args.trace:
        write_trace_json(trace, graph, args.trace)
    print(f"{config.label}: spread {trace.spread} after {len(trace.steps) - 1} step(s) ({trace.terminated_reason})")
    return EXIT_OK


def _cmd_locate(args):
    graph = read_graph(args.graph, args.directed)
    result = locate(args.method, graph, Observation(_read_ids(args.infected)), args.sources)
    print(",".join(map(str, result.predicted)))
    if result.degenerate:
        print("warning: degenerate spectrum, fell back to degree ranking", file=sys.stderr)
    return EXIT_OK


def _cmd_validate(args):
    spec = load_config(args.config)
    print(f"{len(expand_spec(spec))} runs")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run, "gen": _cmd_gen, "simulate": _cmd_simulate,
    "locate": _cmd_locate, "validate": _cmd_validate,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return _COMMANDS[args.command](args)
    except (GraphflowError, ValueError, OSError) as exc:
        print(f"graphflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
