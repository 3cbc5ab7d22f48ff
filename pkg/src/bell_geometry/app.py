import argparse
import json
import sys
from dataclasses import replace
from typing import Any, Dict, List, Optional

from .config import Settings
from .controllers.main_controller import MainController, write_json
from .controllers.verify_controller import VerifyController
from .models.scan_model import ScanAxis, ScanJob, Task
from .models.state_model import Family
from .utils.config import Config
from .utils.errors import BellGeometryError, InputError, ScanJobError
from .utils.logging import Logger


def _add_state_arguments(parser: argparse.ArgumentParser, family_required: bool = False) -> None:
    parser.add_argument('--family', required=family_required, help="state family: "
                        + ", ".join(f.value for f in Family))
    parser.add_argument('--params', help="comma separated family parameters, e.g. 0.2,-0.08")
    parser.add_argument('--d', type=int, help="local dimension (required for isotropic)")
    if not family_required:
        parser.add_argument('--state-file', help="JSON density matrix {dim, re, im}")


def _parse_axis(text: str) -> ScanAxis:
    """name:start:stop:resolution"""
    parts = text.split(':')
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"grid axis must be name:start:stop:resolution, got '{text}'")
    try:
        return ScanAxis(parts[0], float(parts[1]), float(parts[2]), int(parts[3]))
    except (ValueError, ScanJobError) as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group('global options')
    group.add_argument('--seed', type=int, help="master seed of the optimizer restarts")
    group.add_argument('--restarts', type=int, help="Nelder-Mead restarts per maximization")
    group.add_argument('--tol', type=float, help="optimizer tolerance on values and simplex size")
    group.add_argument('--threads', type=int, help="worker processes (default: number of processors)")
    group.add_argument('--output', help="output file")
    group.add_argument('--format', choices=Settings.OUTPUT_FORMATS, help="dataset format")
    group.add_argument('--config', help="YAML, JSON or TOML configuration file")
    group.add_argument('--max-dimension', type=int, help="refuse local dimensions above this")
    group.add_argument('--log-dir', help="also write rotating log files to this directory")
    verbosity = group.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help="debug output on the console")
    verbosity.add_argument('-q', '--quiet', action='store_true', help="warnings and errors only")

    parser = argparse.ArgumentParser(
        prog='bell-geometry',
        description=Settings.APP_INFO['description'],
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {Settings.VERSION}")
    commands = parser.add_subparsers(dest='command', required=True, metavar='command')

    max_bell = commands.add_parser('max-bell', parents=[common], help="maximize the CGLMP value of a state")
    _add_state_arguments(max_bell)
    max_bell.add_argument('--settings', help="evaluate I_d at these settings (JSON) instead of optimizing")
    max_bell.add_argument('--settings-out', help="write the best settings as JSON")

    scan = commands.add_parser('scan', parents=[common], help="scan a family over a parameter grid")
    scan.add_argument('job', nargs='?', help="scan job file (YAML/JSON) or the name of a bundled job")
    scan.add_argument('--family', help="family for an ad-hoc scan")
    scan.add_argument('--d', type=int, help="local dimension (isotropic)")
    scan.add_argument('--grid', action='append', type=_parse_axis, help="axis name:start:stop:resolution")
    scan.add_argument('--tasks', help="comma separated: " + ", ".join(t.value for t in Task))
    scan.add_argument('--equal-split', action='store_true', help="split the last axis over the remaining parameters")
    scan.add_argument('--save-job', help="write the resolved job as YAML")

    boundary = commands.add_parser('boundary', parents=[common],
                                   help="CGLMP boundary above the positivity boundary of a family")
    boundary.add_argument('--family', default='line')
    boundary.add_argument('--d', type=int)
    boundary.add_argument('--resolution', type=int, default=10, help="subdivisions per polytope edge")
    boundary.add_argument('--facets', help="comma separated facet indices (facet i is opposite vertex i)")

    classify = commands.add_parser('classify', parents=[common], help="region membership of a family point")
    _add_state_arguments(classify, family_required=True)

    concurrence = commands.add_parser('concurrence', parents=[common], help="m-concurrence lower bound")
    _add_state_arguments(concurrence)
    concurrence.add_argument('--analytic', action='store_true',
                             help="closed form for rho_line(alpha, beta/2, beta/2); --params alpha,beta")

    verify = commands.add_parser('verify', parents=[common], help="run a verification suite")
    verify.add_argument('suite', choices=Settings.VERIFY_SUITES)
    verify.add_argument('--dmax', type=int, help="largest d for analytic-max")
    verify.add_argument('--step', type=float, help="grid step for line-concurrence")
    verify.add_argument('--samples', type=int, help="product states for local-bound")
    verify.add_argument('--states', type=int, help="random states for horodecki")
    verify.add_argument('--resolution', type=int, help="boundary subdivisions for sphere-fit")
    return parser


class Application:
    """Command-line application"""

    def __init__(self, argv: Optional[List[str]] = None):
        self.args = build_parser().parse_args(argv)
        args = self.args
        overrides = {
            'seed': args.seed,
            'restarts': args.restarts,
            'tol': args.tol,
            'threads': args.threads,
            'format': args.format,
            'output': args.output,
            'max_dimension': args.max_dimension,
            'log_dir': args.log_dir,
        }
        if args.verbose:
            overrides['console_level'] = 'DEBUG'
        elif args.quiet:
            overrides['console_level'] = 'WARNING'
        self.config = Config(args.config, overrides)

        Logger.configure(
            console_level=self.config.get('console_level'),
            directory=self.config.get('log_dir'),
            file_level=self.config.get('file_level'),
        )
        self.logger = Logger.get_instance("app")
        app_info = Settings.APP_INFO
        self.logger.debug(f"{app_info['name']} v{app_info['version']} ({app_info['license']})")

        self.main_controller = MainController(self.config)
        self.verify_controller = VerifyController(self.config)

    def _emit(self, payload: Dict[str, Any]) -> None:
        print(json.dumps(payload, indent=2))
        output = self.config.get('output')
        if output:
            write_json(output, payload)
            self.logger.info(f"Result written to {output}")

    def _scan_job(self) -> ScanJob:
        args = self.args
        if args.job:
            job = ScanJob.from_file(args.job)
        elif args.family and args.grid and args.tasks:
            job = ScanJob(
                family=Family.parse(args.family),
                axes=tuple(args.grid),
                tasks=tuple(Task.parse(t) for t in args.tasks.split(',') if t.strip()),
                d=args.d,
                equal_split=args.equal_split,
                format=self.config.get('format'),
                name=f"{Family.parse(args.family).value}_scan",
            )
        else:
            raise InputError("scan needs a job file, or --family with --grid and --tasks")
        # command-line optimizer flags take precedence over the job file
        given = {key: getattr(args, key) for key in ('seed', 'restarts', 'tol')}
        if any(value is not None for value in given.values()):
            merged = Config(overrides=job.optimizer.to_dict())
            merged.merge(given)
            job = replace(job, optimizer=merged.optimizer_config())
        if args.save_job:
            job.save(args.save_job)
        return job

    def _dispatch(self) -> int:
        args = self.args
        command = args.command
        if command == 'max-bell':
            self._emit(self.main_controller.max_bell(
                args.family, args.params, args.d, args.state_file, args.settings, args.settings_out,
            ))
        elif command == 'scan':
            summary = self.main_controller.scan(self._scan_job(), self.config.get('output'), args.format)
            print(json.dumps(summary, indent=2))
        elif command == 'boundary':
            facets = None if args.facets is None else [int(f) for f in args.facets.split(',') if f.strip()]
            frame = self.main_controller.boundary(
                args.family, args.resolution, args.d, facets, self.config.get('output'), args.format,
            )
            if not self.config.get('output'):
                print(frame.to_string(index=False))
        elif command == 'classify':
            self._emit(self.main_controller.classify(args.family, args.params, args.d))
        elif command == 'concurrence':
            self._emit(self.main_controller.concurrence(
                args.family, args.params, args.d, args.state_file, args.analytic,
            ))
        elif command == 'verify':
            options = {
                'dmax': args.dmax, 'step': args.step, 'samples': args.samples,
                'states': args.states, 'resolution': args.resolution,
            }
            passed, report = self.verify_controller.run(args.suite, **options)
            print(self.verify_controller.format_report(report))
            print(f"\n{args.suite}: {'PASS' if passed else 'FAIL'}")
            return Settings.EXIT_OK if passed else Settings.EXIT_VERIFICATION_FAILED
        return Settings.EXIT_OK

    def run(self) -> int:
        """Run the selected command and map failures to exit codes"""
        try:
            return self._dispatch()
        except BellGeometryError as e:
            self.logger.error(f"{type(e).__name__}: {e}")
            print(f"error: {e}", file=sys.stderr)
            return e.exit_code
        except OSError as e:
            self.logger.error(f"I/O error: {e}")
            print(f"error: {e}", file=sys.stderr)
            return Settings.EXIT_INPUT_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    try:
        application = Application(argv)
    except BellGeometryError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    return application.run()


if __name__ == "__main__":
    sys.exit(main())
