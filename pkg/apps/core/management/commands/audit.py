"""
Management command to audit the four downsampling methods against a reference image.
Usage: python manage.py audit --reference ref.png --source big.png --out DIR
"""
import math

from apps.core.commands import PipelineCommand
from apps.metrics.audit import audit_images


class Command(PipelineCommand):
    help = 'Downsample a source to the reference size by every method and report MSE/PSNR/SSIM'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--reference', required=True, help='Reference image at the target size')
        parser.add_argument('--source', required=True, help='Larger source image to downsample')
        parser.add_argument('--out', required=True, help='Directory for audit.csv and diff maps')

    def run(self, **options):
        reports = audit_images(options['reference'], options['source'], options['out'])
        self.stdout.write(f'{"method":<8} {"mse":>10} {"psnr":>9} {"ssim":>8}')
        for report in reports:
            psnr = 'inf' if math.isinf(report.psnr_db) else f'{report.psnr_db:.2f}'
            self.stdout.write(f'{report.method:<8} {report.mse:>10.2f} {psnr:>9} {report.ssim:>8.4f}')
        self.success(f'Audit written to {options["out"]}')
