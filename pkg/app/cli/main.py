import argparse
import json
from pathlib import Path
import sys

from pydantic import ValidationError
import structlog

from app.backends.structures import BackendName
from app.causal.scenarios import Scenario
from app.cli import commands
from app.cli.report import RunReport, failure_list, write_reports
from app.codec import CodecError
from app.log_config import configure_logging
from app.mutex.runner import MutexPlan
from app.settings import settings
from app.validators.errors import PermissionFileError
from app.validators.structures import FrontendKind


logger = structlog.get_logger()

BACKENDS = [backend.value for backend in BackendName]


def _common(parser: argparse.ArgumentParser, seed: bool = True) -> None:
    parser.add_argument('--out', default=settings.out_dir, help='Artifact directory')
    if seed:
        parser.add_argument('--seed', type=int, default=settings.default_seed)


def _backend(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--backend', choices=BACKENDS, default=settings.backend)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='python -m app.cli', description='Verifiable logical clock toolkit'
    )
    parser.add_argument('--log', default=None, help='Log level (default CHRONO_LOG)')
    sub = parser.add_subparsers(dest='command', required=True)

    keys = sub.add_parser('keys', help='Generate seeded keys and a signed permission table')
    _common(keys, seed=False)
    _backend(keys)
    keys.add_argument('--seed', default='chrono', help='Key derivation label')
    keys.add_argument('--entities', nargs='+', default=['P1', 'P2', 'P3'])
    keys.add_argument('--n', type=int, default=settings.quorum_n)
    keys.add_argument('--f', type=int, default=settings.quorum_f)
    keys.set_defaults(func=commands.cmd_keys, report=None)

    attack = sub.add_parser('attack', help='Run a causal delivery attack scenario')
    _common(attack)
    _backend(attack)
    attack.add_argument('scenario', choices=[s.value for s in Scenario] + ['all'])
    attack.add_argument('--no-mono', action='store_true', help='Disable the MONO frontend')
    attack.add_argument('--trace', action='store_true', help='Write the trace as JSON lines')
    attack.set_defaults(func=commands.cmd_attack, report='attack')

    mutex = sub.add_parser('mutex', help='Run a mutual exclusion simulation')
    _common(mutex)
    _backend(mutex)
    mutex.add_argument('--n', type=int, default=5)
    mutex.add_argument('--contenders', type=int, default=None)
    mutex.add_argument('--rounds', type=int, default=1)
    mutex.add_argument(
        '--plan',
        default=MutexPlan.NONE.value,
        help=f'One of {", ".join(p.value for p in MutexPlan)} or a fault plan JSON file',
    )
    mutex.add_argument('--trace', action='store_true')
    mutex.set_defaults(func=commands.cmd_mutex, report='mutex')

    store = sub.add_parser('store', help='Causally consistent store runs')
    store_sub = store.add_subparsers(dest='store_command', required=True)

    bench = store_sub.add_parser('bench', help='Simulated workload benchmark')
    _common(bench)
    _backend(bench)
    bench.add_argument('--servers', type=int, default=3)
    bench.add_argument('--clients', type=int, default=2)
    bench.add_argument('--ops', type=int, default=1000, help='Operations per client')
    bench.add_argument('--keys', type=int, default=100)
    bench.add_argument(
        '--ratio', type=float, nargs='+', default=[0.01], help='Write ratios to sweep'
    )
    bench.add_argument('--byzantine', action='store_true', help='Every server forges replies')
    bench.add_argument('--trace', action='store_true')
    bench.set_defaults(func=commands.cmd_store_bench, report='store-bench')

    serve = store_sub.add_parser('serve', help='Run a cluster config over localhost sockets')
    _common(serve, seed=False)
    serve.add_argument('--config', required=True, help='Cluster JSON (store run config)')
    serve.add_argument('--timeout', type=float, default=60.0, help='Seconds')
    serve.add_argument('--trace', action='store_true')
    serve.set_defaults(func=commands.cmd_store_serve, report='store-serve')

    check = sub.add_parser('check', help='Run the trace checkers over a JSON-lines trace')
    _common(check, seed=False)
    check.add_argument('trace')
    check.add_argument('--honest', nargs='+', default=None, help='Processes held to causal delivery')
    check.set_defaults(func=commands.cmd_check, report='check')

    micro = sub.add_parser('micro', help='Wall-clock proving micro-benchmarks')
    _common(micro, seed=False)
    _backend(micro)
    micro.add_argument('--reps', type=int, default=20)
    micro.set_defaults(func=commands.cmd_micro, report='micro')

    node = sub.add_parser('node', help='Validator services')
    node_sub = node.add_subparsers(dest='node_command', required=True)
    node_serve = node_sub.add_parser('serve', help='Serve validators over TCP')
    _common(node_serve, seed=False)
    node_serve.add_argument('--backend', choices=['quorum', 'attested'], default='quorum')
    node_serve.add_argument('--seed', default='chrono', help='Key derivation label')
    node_serve.add_argument(
        '--kinds', nargs='+', choices=[k.value for k in FrontendKind], default=['update', 'mono']
    )
    node_serve.add_argument('--entities', nargs='+', default=['P1', 'P2', 'P3'])
    node_serve.add_argument('--n', type=int, default=settings.quorum_n)
    node_serve.add_argument('--f', type=int, default=settings.quorum_f)
    node_serve.add_argument('--node', nargs='+', default=None, help='Serve only these ids')
    node_serve.add_argument('--host', default='127.0.0.1')
    node_serve.add_argument('--duration', type=float, default=None, help='Seconds; forever if unset')
    node_serve.set_defaults(func=commands.cmd_node_serve, report=None)
    return parser


def _finish(name: str, out: Path, reports: list[RunReport]) -> int:
    write_reports(out, name, reports)
    failures = failure_list(reports)
    summary = {
        'report': name,
        'passed': all(report.passed for report in reports),
        'failures': failures,
    }
    print(json.dumps(summary, sort_keys=True))
    return 0 if summary['passed'] else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log)
    try:
        outcome = args.func(args)
    except (OSError, ValidationError, CodecError, PermissionFileError, ValueError) as e:
        logger.error('Command failed', command=args.command, error=str(e))
        print(json.dumps({'passed': False, 'failures': [{'error': str(e)}]}))
        return 2
    if args.report is None:
        return outcome
    return _finish(args.report, Path(args.out), outcome)


if __name__ == '__main__':
    sys.exit(main())
