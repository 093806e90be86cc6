"""Directory scanning and census CSV output."""
import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from django.conf import settings
from PIL import UnidentifiedImageError

from apps.core.exceptions import DataError

from .imageio import is_image_path, read_dimensions
from .records import ImageRecord, ResolutionCensus

logger = logging.getLogger(__name__)

CENSUS_HEADER = ['width', 'height', 'count']
SUMMARY_HEADER = [
    'total_images', 'distinct_resolutions', 'mean_per_resolution', 'sd_per_resolution',
    'landscape_count', 'portrait_count', 'square_count',
]


def _read_record(path):
    try:
        width, height = read_dimensions(path)
    except (OSError, UnidentifiedImageError, SyntaxError, ValueError) as exc:
        logger.debug('Skipping undecodable image %s: %s', path, exc)
        return None
    return ImageRecord(path=path, width=width, height=height)


def scan_dataset(directory, workers=None):
    """Records for every decodable PNG/JPEG under ``directory`` (sorted by path) and their census.

    Undecodable files are skipped and counted in a warning.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f'Dataset directory {directory} does not exist')
    paths = sorted(p for p in directory.rglob('*') if p.is_file() and is_image_path(p))
    workers = workers or settings.ANYSIZE_THREADS or None
    with ThreadPoolExecutor(max_workers=workers) as pool:
        read = list(pool.map(_read_record, paths))

    records = [record for record in read if record is not None]
    skipped = len(paths) - len(records)
    if skipped:
        logger.warning('Skipped %d undecodable image(s) under %s', skipped, directory)
    if not records:
        raise DataError(f'No decodable images under {directory}')
    census = ResolutionCensus.from_records(records)
    logger.info(
        'Scanned %d image(s) at %d resolution(s) under %s',
        census.total_images, census.distinct_resolutions, directory,
    )
    return records, census


def write_census_csv(census, path):
    """Per-resolution rows followed by a summary header and row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(CENSUS_HEADER)
        for (width, height), count in census.counts.items():
            writer.writerow([width, height, count])
        summary = census.summary()
        writer.writerow(SUMMARY_HEADER)
        writer.writerow([summary[key] for key in SUMMARY_HEADER])
    return path
