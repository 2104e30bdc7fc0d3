#!/usr/bin/env python3
"""
Linear Response Pipeline - single runs, convergence studies and oracles.
Computes derivatives of long-time averages of chaotic maps with respect to a parameter.
"""

import sys
import argparse
from pathlib import Path

# Add repository root to path
sys.path.insert(0, str(Path(__file__).parent))

from src.config.settings import RunConfig, initialize_config
from src.experiments.studies import gamma_sweep, scaling_a, scaling_w
from src.sensitivity.oracle import FdOracleConfig, fd_regression
from src.sensitivity.response import compute_response, replicate, write_summary_csv
from src.systems import registry
from src.systems.validation import random_probe_states, validate_system
from src.utils.errors import LinearResponseError, ValidationFailedError
from src.utils.logging_config import setup_logging, get_logger
from src.utils.output import dumps_json, save_json, write_csv


COMMANDS = ['run', 'scaling-a', 'scaling-w', 'gamma-sweep', 'validate', 'oracle']


class LinearResponsePipeline:
    """
    Runs one command against the effective run configuration.
    JSON goes to --output or stdout; study CSVs likewise.
    """

    def __init__(self, run_config: RunConfig, enable_debug=False):
        self.config = run_config
        self.enable_debug = enable_debug

        # Setup logging
        setup_logging(log_level=run_config.log_level, enable_debug=enable_debug,
                      log_to_file=run_config.log_to_file)
        self.logger = get_logger('pipeline')

        self.system = registry.get_system(run_config.map_name)
        self.observable = self.system.observable()
        self.output = Path(run_config.output) if run_config.output else None

    def _emit_json(self, data):
        if self.output:
            save_json(data, self.output)
            self.logger.info(f"Wrote {self.output}")
        else:
            print(dumps_json(data))

    def run_single(self, reps: int = 1) -> bool:
        """One response computation, or a replicate summary when reps > 1"""
        if reps > 1:
            summary = replicate(self.system, self.observable, self.config, reps=reps)
            if self.output and self.output.suffix == '.csv':
                write_summary_csv(summary, self.output, self.config.to_dict())
            else:
                self._emit_json({**summary.to_dict(), 'config': self.config.to_dict()})
            return not summary.failures

        report = compute_response(self.system, self.observable, self.config)
        self._emit_json(report.to_dict())
        return True

    def run_study(self, command: str) -> bool:
        """scaling-a, scaling-w or gamma-sweep"""
        if command == 'scaling-a':
            result = scaling_a(self.system, self.observable, self.config)
        elif command == 'scaling-w':
            result = scaling_w(self.system, self.observable, self.config)
        else:
            result = gamma_sweep(self.system, self.observable, self.config)
        result.write(self.output, self.config.to_dict(), stream=None if self.output else sys.stdout)
        return True

    def run_validation(self) -> bool:
        """Finite-difference check of every derivative callback"""
        probes = random_probe_states(self.system, self.config.probe_count, seed=self.config.seed)
        report = validate_system(self.system, probes, self.config.gamma,
                                 observable=self.observable, seed=self.config.seed)
        self._emit_json(report.to_dict())
        if not report.passed:
            raise ValidationFailedError(f"{self.system.name}: failed checks {report.failures}",
                                        stage='validation')
        return True

    def run_oracle(self) -> bool:
        """Finite-difference regression alone"""
        oracle_config = FdOracleConfig.from_run_config(self.config)
        result = fd_regression(self.system, self.observable, oracle_config,
                               workers=self.config.resolve_workers())
        rows = [[p.gamma, p.mean_phi, p.std_phi, p.runs] for p in result.table]
        trailer = [f"slope={result.slope!r}", f"slope_stderr={result.slope_stderr!r}",
                   f"intercept={result.intercept!r}"]
        trailer += [f"dropped gamma={g!r}" for g in result.dropped]
        write_csv(self.output, ['gamma', 'mean_phi', 'std_phi', 'runs'], rows, self.config.to_dict(),
                  trailer=trailer, stream=None if self.output else sys.stdout)
        return True

    def execute(self, command: str, reps: int = 1) -> bool:
        self.logger.info(f"Command {command} on {self.system.name}")
        if command == 'run':
            return self.run_single(reps)
        if command in ('scaling-a', 'scaling-w', 'gamma-sweep'):
            return self.run_study(command)
        if command == 'validate':
            return self.run_validation()
        return self.run_oracle()


def _int_list(text: str):
    return [int(v) for v in text.split(',') if v.strip()]


def _float_list(text: str):
    return [float(v) for v in text.split(',') if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Linear Response Pipeline - derivatives of long-time averages of chaotic maps',
        epilog='Flags override values from the config file'
    )
    parser.add_argument('command', nargs='?', default='run', choices=COMMANDS,
                        help='Command to run')
    parser.add_argument('--config', help='Flat YAML configuration file')
    parser.add_argument('--map', dest='map_name', help='System name')
    parser.add_argument('--gamma', type=float, help='Parameter value')
    parser.add_argument('--N', dest='n_steps', type=int, help='Steps per segment')
    parser.add_argument('--A', dest='n_segments', type=int, help='Number of segments')
    parser.add_argument('--W', dest='window', type=int, help='Decorrelation window')
    parser.add_argument('--u', dest='unstable_dim', type=int, help='Number of tracked unstable directions')
    parser.add_argument('--spinup', type=int, help='Discarded initial steps')
    parser.add_argument('--seed', type=int, help='Random seed')
    parser.add_argument('--reps', type=int, help='Replicas')
    parser.add_argument('--output', help='Output file (JSON for run, CSV for studies)')
    parser.add_argument('--discard-segments', dest='discard_segments', type=int,
                        help='Leading segments left out of the unstable contribution')
    parser.add_argument('--warmup', dest='tangent_warmup', type=int, help='Tangent warm-up steps')
    parser.add_argument('--A-list', dest='a_list', type=_int_list, help='Comma-separated A values')
    parser.add_argument('--W-list', dest='w_list', type=_int_list, help='Comma-separated W values')
    parser.add_argument('--gamma-list', dest='gamma_list', type=_float_list, help='Comma-separated gamma values')
    parser.add_argument('--probes', dest='probe_count', type=int, help='Validation probe states')
    parser.add_argument('--store-trajectory', dest='store_trajectory', action='store_const', const=True,
                        help='Keep per-step tangent values instead of replaying')
    parser.add_argument('--diagnostics-dir', dest='diagnostics_dir', help='Directory for per-segment diagnostics')
    parser.add_argument('--dump-orbit', dest='dump_orbit', help='Write the orbit states (.csv or .bin)')
    parser.add_argument('--no-log-file', dest='log_to_file', action='store_const', const=False,
                        help='Log to the console only')
    parser.add_argument('--debug', action='store_true', help='Enable debug logging')
    return parser


OVERRIDE_KEYS = ('map_name', 'gamma', 'n_steps', 'n_segments', 'window', 'unstable_dim', 'spinup', 'seed',
                 'reps', 'output', 'discard_segments', 'tangent_warmup', 'a_list', 'w_list', 'gamma_list',
                 'probe_count', 'store_trajectory', 'diagnostics_dir', 'dump_orbit', 'log_to_file')


def main(argv=None):
    """Main function with command line arguments"""
    args = build_parser().parse_args(argv)

    # Load configuration
    try:
        manager = initialize_config(args.config)
        overrides = {key: getattr(args, key) for key in OVERRIDE_KEYS}
        run_config = manager.run_config.with_overrides(**overrides)
        pipeline = LinearResponsePipeline(run_config, enable_debug=args.debug)
    except LinearResponseError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return e.exit_code

    # Execute requested command; --reps only turns `run` into a replicate summary when given
    try:
        reps = args.reps if args.command == 'run' and args.reps else 1
        success = pipeline.execute(args.command, reps=reps)
        return 0 if success else 1

    except LinearResponseError as e:
        pipeline.logger.error(f"{type(e).__name__}: {e}")
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        print("Pipeline interrupted by user", file=sys.stderr)
        return 1
    except Exception as e:
        pipeline.logger.exception("Pipeline failed with unexpected error")
        print(f"Pipeline failed with unexpected error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
