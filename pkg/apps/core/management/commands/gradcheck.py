"""
Management command to verify every layer's analytic gradient against central differences.
Usage: python manage.py gradcheck [--threshold 1e-4] [--cases 20]
"""
import csv
from pathlib import Path

from apps.core.commands import PipelineCommand
from apps.core.exceptions import VerificationError
from apps.networks.verification import gradcheck_suite


class Command(PipelineCommand):
    help = 'Run 64-bit finite-difference gradient checks over every layer and D(G(z, s))'
    settings_options = {
        **PipelineCommand.settings_options,
        'threshold': ('ANYSIZE_GRADCHECK_THRESHOLD', float),
    }

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--threshold', type=float, help='Maximum relative error')
        parser.add_argument('--cases', type=int, default=20, help='Random cases per layer')
        parser.add_argument('--end-to-end-cases', type=int, default=2)
        parser.add_argument('--out', help='Optional directory for gradcheck.csv')

    def run(self, **options):
        rows = gradcheck_suite(
            options['threshold'], cases=options['cases'], seed=options['seed'],
            end_to_end_cases=options['end_to_end_cases'],
        )
        for row in rows:
            line = f'{row.layer:<34} {row.max_error:.3e}  ({row.cases} cases)'
            if row.passed:
                self.success(line)
            else:
                self.failure(line)

        if options['out']:
            with (Path(options['out']) / 'gradcheck.csv').open('w', newline='') as handle:
                writer = csv.writer(handle)
                writer.writerow(['layer', 'max_error', 'cases', 'passed'])
                writer.writerows([row.layer, repr(row.max_error), row.cases, row.passed] for row in rows)

        failed = [row.layer for row in rows if not row.passed]
        if failed:
            raise VerificationError(
                f'{len(failed)} layer(s) above threshold {options["threshold"]:g}: {", ".join(failed)}'
            )
        self.success(f'All {len(rows)} gradient checks below {options["threshold"]:g}')
