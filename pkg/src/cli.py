"""
Command-line entry point: solve, export and verify

JSON results go to stdout, progress and summaries to stderr.

Exit codes:
    0  success
    1  a verification check failed
    2  usage error, invalid channel file, level guard or unknown suite
    3  CPTP validation failure
    4  solver did not converge (partial result printed)
    5  I/O failure
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from src.core.config import RunConfig, config_errors, load_config_file
from src.core.errors import ChannelFileError, ChannelValidationError, HierarchyError, SolverError
from src.engine import FidelityHierarchyEngine
from src.verification.suites import SUITES, run_suites

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_CPTP = 3
EXIT_SOLVER = 4
EXIT_IO = 5


def _emit(payload: Dict[str, Any]) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + '\n')
    sys.stdout.flush()


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='JSON file with RunConfig keys (flags take precedence)')
    parser.add_argument('--channel', help='Built-in channel name or channel JSON file')
    parser.add_argument('--param', type=float, help='Channel parameter')
    parser.add_argument('--dim', type=int, help='Dimension of built-in channel families')
    parser.add_argument('--M', dest='M', type=int, help='Code dimension')
    parser.add_argument('--level', type=int, help='Hierarchy level n >= 1')
    parser.add_argument('--threads', type=int, help='Worker processes for the pairing tables')
    parser.add_argument('--log-level', dest='log_level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='fidelity-hierarchy',
                                     description='Upper bounds on channel fidelity from a symmetry-reduced SDP hierarchy')
    sub = parser.add_subparsers(dest='command', required=True)

    solve = sub.add_parser('solve', help='Solve one level of the hierarchy')
    _add_run_options(solve)
    solve.add_argument('--solver', choices=['auto', 'ipm', 'admm'])
    solve.add_argument('--tol', type=float, help='Solver tolerance')
    solve.add_argument('--max-iter', dest='max_iter', type=int, help='Iteration cap of the splitting solver')
    solve.add_argument('--linear-solver', dest='linear_solver', choices=['direct', 'indirect'])
    solve.add_argument('--seesaw', action='store_true', help='Also report the alternating lower bound')
    solve.add_argument('--seesaw-rounds', dest='seesaw_rounds', type=int)
    solve.add_argument('--seed', type=int, help='Seed of the seesaw starting decoder')
    solve.add_argument('--out', help='Also write the JSON result to this file')

    export = sub.add_parser('export', help='Write the level program in SDPA sparse format')
    _add_run_options(export)
    export.add_argument('--format', dest='export_format', choices=['sdpa'])
    export.add_argument('--out', required=True, help='Path of the .dat-s file')

    verify = sub.add_parser('verify', help='Run an invariant suite')
    verify.add_argument('--suite', required=True, help=f"One of {', '.join(list(SUITES) + ['all'])}")
    verify.add_argument('--log-level', dest='log_level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    return parser


def _config_from(args: argparse.Namespace) -> RunConfig:
    keys = set(RunConfig.model_fields)
    flags = {k: v for k, v in vars(args).items() if k in keys}
    file_values = load_config_file(args.config) if getattr(args, 'config', None) else {}
    return RunConfig.layered(file_values, flags)


def cmd_solve(args: argparse.Namespace, config: RunConfig) -> int:
    engine = FidelityHierarchyEngine(config)
    try:
        engine.load_channel()
        record = engine.run_level(config.level, with_seesaw=args.seesaw)
    except SolverError as e:
        logger.error(str(e))
        _emit({'error': str(e), 'round': e.round_index,
               'partial': e.result.to_dict() if e.result is not None else None})
        return EXIT_SOLVER

    payload = record.model_dump()
    if config.out:
        with open(config.out, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2, sort_keys=True)
    _emit(payload)
    print(f"level {record.level}: value={record.value:.8f} status={record.status} "
          f"gap={record.gap:.2e} ({record.timings_ms['total']:.0f} ms)", file=sys.stderr)
    if record.status != 'optimal':
        return EXIT_SOLVER
    return EXIT_OK


def cmd_export(args: argparse.Namespace, config: RunConfig) -> int:
    engine = FidelityHierarchyEngine(config)
    engine.load_channel()
    paths = engine.export(args.out, config.level)
    reduced, program = engine.assemble(config.level)
    _emit({'files': paths, 'level': config.level, 'M': config.M, 'num_vars': program.num_vars,
           'block_struct': program.block_sides, 'rows': program.num_rows})
    print(f"wrote {paths['sdpa']} and {paths['manifest']}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    record, tables = run_suites(args.suite)
    for name, table in tables.items():
        print(f"\n[{name}]", file=sys.stderr)
        print(table.to_string(index=False), file=sys.stderr)
    _emit(record.model_dump())
    return EXIT_OK if record.passed else EXIT_VERIFY_FAILED


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(args, 'log_level', None) or 'INFO', stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    try:
        if args.command == 'verify':
            if args.suite != 'all' and args.suite not in SUITES:
                _emit({'error': f"unknown suite '{args.suite}'", 'suites': list(SUITES) + ['all']})
                return EXIT_USAGE
            return cmd_verify(args)
        config = _config_from(args)
        logging.getLogger().setLevel(config.log_level)
        if args.command == 'solve':
            return cmd_solve(args, config)
        return cmd_export(args, config)
    except ValidationError as e:
        _emit({'error': 'invalid configuration', 'details': config_errors(e)})
        return EXIT_USAGE
    except ChannelFileError as e:
        _emit({'error': str(e), 'diagnostics': e.diagnostics})
        return EXIT_USAGE
    except ChannelValidationError as e:
        _emit({'error': str(e), 'report': e.report.to_dict() if e.report is not None else None})
        return EXIT_CPTP
    except HierarchyError as e:
        _emit({'error': str(e)})
        return EXIT_USAGE
    except OSError as e:
        _emit({'error': str(e)})
        return EXIT_IO


if __name__ == '__main__':
    sys.exit(main())
