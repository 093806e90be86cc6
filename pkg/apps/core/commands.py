"""Shared plumbing for the pipeline management commands."""
import logging
import re
from pathlib import Path

from decouple import RepositoryEnv
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from .exceptions import (
    CheckpointError, DataError, InvalidSizeError, NonFiniteError, PipelineError, ScoreError, ShapeError,
    VerificationError,
)

logger = logging.getLogger(__name__)

USAGE_ERROR = 1
DATA_ERROR = 2
VERIFICATION_ERROR = 3

RUN_CONFIG_NAME = 'run-config.txt'
SIZE_PATTERN = re.compile(r'^\s*(\d+)\s*[xX*]\s*(\d+)\s*$')


def parse_size(text):
    """'HxW' -> (H, W)."""
    match = SIZE_PATTERN.match(str(text))
    if not match:
        raise InvalidSizeError(f'Invalid size {text!r}; expected HxW, e.g. 96x128')
    height, width = int(match.group(1)), int(match.group(2))
    if height < 1 or width < 1:
        raise InvalidSizeError(f'Invalid size {text!r}; both dimensions must be >= 1')
    return height, width


def parse_sizes(text):
    """'H1xW1,H2xW2' -> [(H1, W1), (H2, W2)]."""
    parts = [part for part in str(text).split(',') if part.strip()]
    if not parts:
        raise InvalidSizeError('Expected at least one HxW size')
    return [parse_size(part) for part in parts]


def parse_channels(text):
    try:
        return tuple(int(part) for part in str(text).split(','))
    except ValueError as exc:
        raise InvalidSizeError(f'Invalid channel list {text!r}; expected e.g. 256,128,64,32,16') from exc


def exit_code(exc):
    if isinstance(exc, VerificationError):
        return VERIFICATION_ERROR
    if isinstance(exc, (InvalidSizeError, ScoreError)):
        return USAGE_ERROR
    if isinstance(exc, (DataError, CheckpointError, ShapeError, NonFiniteError, OSError)):
        return DATA_ERROR
    return USAGE_ERROR


class PipelineCommand(BaseCommand):
    """Base command: --config/--seed/--threads handling, exit codes and the run-config echo.

    ``settings_options`` maps an option to (settings name, cast). Its value
    comes from the flag, else the --config file, else Django settings.
    """
    settings_options = {
        'seed': ('ANYSIZE_SEED', int),
        'threads': ('ANYSIZE_THREADS', int),
    }
    requires_system_checks = []

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)

        def usage_error(message):
            raise CommandError(f'Error: {message}', returncode=USAGE_ERROR)

        parser.error = usage_error
        return parser

    def run_from_argv(self, argv):
        try:
            super().run_from_argv(argv)
        except CommandError as exc:
            # argument parsing happens outside BaseCommand's own handler
            self.stderr.write(str(exc))
            raise SystemExit(exc.returncode)

    def add_arguments(self, parser):
        parser.add_argument('--config', help='key=value file; flags override its values')
        parser.add_argument('--seed', type=int, help='Random seed (default: ANYSIZE_SEED)')
        parser.add_argument('--threads', type=int, help='BLAS/OpenMP threads; 1 gives bitwise reproducibility')
        self.add_pipeline_arguments(parser)

    def add_pipeline_arguments(self, parser):
        pass

    def resolve_options(self, options):
        values = {}
        if options.get('config'):
            try:
                values = RepositoryEnv(options['config']).data
            except OSError as exc:
                raise CommandError(f'Cannot read config file: {exc}', returncode=USAGE_ERROR) from exc
        resolved = dict(options)
        # names set by a flag or the config file rather than a settings default
        self.explicit_options = set()
        for name, (setting, cast) in self.settings_options.items():
            if options.get(name) is not None:
                self.explicit_options.add(name)
                continue
            file_value = values.get(name, values.get(setting))
            if file_value is not None:
                self.explicit_options.add(name)
            try:
                resolved[name] = cast(file_value) if file_value is not None else getattr(settings, setting)
            except ValueError as exc:
                raise CommandError(f'Invalid value for {name}: {file_value!r}', returncode=USAGE_ERROR) from exc
        return resolved

    def output_dir(self, options):
        return Path(options['out']) if options.get('out') else None

    def write_run_config(self, options):
        out_dir = self.output_dir(options)
        if out_dir is None:
            return None
        out_dir.mkdir(parents=True, exist_ok=True)
        skip = {
            'verbosity', 'settings', 'pythonpath', 'traceback', 'no_color', 'force_color', 'skip_checks',
            'stdout', 'stderr',
        }
        lines = [f'{key}={value}' for key, value in sorted(options.items()) if key not in skip]
        path = out_dir / RUN_CONFIG_NAME
        path.write_text('\n'.join(lines) + '\n')
        return path

    def handle(self, *args, **options):
        try:
            options = self.resolve_options(options)
            self.write_run_config(options)
            return self.run(**options)
        except CommandError:
            raise
        except (PipelineError, ValueError, OSError) as exc:
            logger.error('%s failed: %s', type(self).__module__.rsplit('.', 1)[-1], exc)
            raise CommandError(str(exc), returncode=exit_code(exc)) from exc

    def run(self, **options):
        raise NotImplementedError

    def success(self, message):
        self.stdout.write(self.style.SUCCESS(f'✓ {message}'))

    def failure(self, message):
        self.stdout.write(self.style.ERROR(f'✗ {message}'))
