"""Resizing audit: downsample a source to a reference by every method and score each result."""
import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from apps.core.exceptions import ShapeError, VerificationError
from apps.datasets.imageio import read_image, write_png

from .quality import diff_map, mse, psnr_from_mse, ssim
from .resampling import METHODS, downsample

logger = logging.getLogger(__name__)

AUDIT_HEADER = ['method', 'mse', 'psnr', 'ssim']
PSNR_TOLERANCE_DB = 0.01


@dataclass(frozen=True)
class AuditReport:
    method: str
    mse: float
    psnr_db: float
    ssim: float
    diff_map_path: Path = None
    resized_path: Path = None

    def row(self):
        psnr_text = 'inf' if math.isinf(self.psnr_db) else f'{self.psnr_db:.4f}'
        return [self.method, repr(float(self.mse)), psnr_text, f'{self.ssim:.6f}']

    def identity_holds(self, tolerance=PSNR_TOLERANCE_DB):
        return row_identity_holds(self.row(), tolerance)


def row_identity_holds(row, tolerance=PSNR_TOLERANCE_DB):
    """Whether the PSNR written in an audit.csv row follows from the MSE written beside it."""
    expected = psnr_from_mse(float(row[1]))
    written = float(row[2])
    if math.isinf(expected) or math.isinf(written):
        return expected == written
    return abs(expected - written) <= tolerance


def audit_arrays(reference, source):
    """(method, resized, mse, psnr, ssim, diff map) per method, resized images quantized to 8 bits."""
    reference = np.asarray(reference)
    source = np.asarray(source)
    height, width = reference.shape[:2]
    if source.shape[0] < height or source.shape[1] < width:
        raise ShapeError(
            f'Source {source.shape[1]}x{source.shape[0]} is smaller than reference {width}x{height}'
        )
    results = []
    for method in METHODS:
        resized = np.rint(downsample(source, height, width, method)).astype(np.uint8)
        error = mse(reference, resized)
        score, _ = ssim(reference, resized)
        results.append((method, resized, error, psnr_from_mse(error), score, diff_map(reference, resized)))
    return results


def audit_images(reference_path, source_path, out_dir):
    """Write audit.csv, diff_<method>.png and resized_<method>.png; return one report per method."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for method, resized, error, psnr_db, score, diff in audit_arrays(read_image(reference_path), read_image(source_path)):
        reports.append(AuditReport(
            method=method,
            mse=error,
            psnr_db=psnr_db,
            ssim=score,
            diff_map_path=write_png(np.repeat(diff[..., None], 3, axis=2), out_dir / f'diff_{method}.png'),
            resized_path=write_png(resized, out_dir / f'resized_{method}.png'),
        ))

    broken = [report.method for report in reports if not report.identity_holds()]
    if broken:
        raise VerificationError(f'PSNR/MSE identity violated for {", ".join(broken)}')

    with (out_dir / 'audit.csv').open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(AUDIT_HEADER)
        writer.writerows(report.row() for report in reports)
    logger.info('Audit of %s against %s written to %s', source_path, reference_path, out_dir)
    return reports
