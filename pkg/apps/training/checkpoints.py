"""Checkpoints: a JSON manifest plus one raw little-endian blob.

The manifest lists every stored array with its name, shape, byte offset and
scalar type, together with optimizer hyperparameters, the bit-generator
state, epoch/step counters and the network configs needed to rebuild the
models.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from apps.autodiff.optim import AdamState
from apps.core.exceptions import (
    CheckpointCorruptError, CheckpointError, CheckpointVersionError, UnknownParameterError,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DTYPES = {'float32': np.dtype('<f4'), 'float64': np.dtype('<f8')}


@dataclass
class Checkpoint:
    manifest: dict
    arrays: dict = field(repr=False)

    @property
    def counters(self):
        return self.manifest.get('counters', {})

    @property
    def configs(self):
        return self.manifest.get('configs', {})

    def model_arrays(self, key):
        prefix = f'{key}.'
        return {name[len(prefix):]: value for name, value in self.arrays.items() if name.startswith(prefix)}


def blob_path(manifest_path):
    return Path(manifest_path).with_suffix('.bin')


def _entries(models, optimizers):
    for key, model in models.items():
        for name, parameter in model.named_parameters(f'{key}.'):
            yield name, parameter.value
    for key, optimizer in (optimizers or {}).items():
        for parameter, state in zip(optimizer.parameters, optimizer.states):
            yield f'optimizer.{key}.m.{parameter.name}', state.m
            yield f'optimizer.{key}.v.{parameter.name}', state.v


def save_checkpoint(path, models, optimizers=None, rng=None, counters=None, configs=None):
    """Write ``path`` (manifest) and its ``.bin`` blob; returns the manifest path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    blob = blob_path(path)
    with blob.open('wb') as handle:
        for name, value in _entries(models, optimizers):
            dtype = np.dtype(value.dtype).name
            if dtype not in DTYPES:
                raise CheckpointError(f'Cannot store {name} with scalar type {dtype}')
            data = np.ascontiguousarray(value, dtype=DTYPES[dtype]).tobytes()
            handle.write(data)
            entries.append({'name': name, 'shape': list(value.shape), 'offset': offset, 'dtype': dtype})
            offset += len(data)

    manifest = {
        'format_version': FORMAT_VERSION,
        'blob': blob.name,
        'blob_bytes': offset,
        'entries': entries,
        'optimizers': {key: optimizer.hyperparameters() for key, optimizer in (optimizers or {}).items()},
        'rng': rng.bit_generator.state if rng is not None else None,
        'counters': counters or {},
        'configs': configs or {},
    }
    path.write_text(json.dumps(manifest, indent=2))
    logger.info('Checkpoint written to %s (%d arrays, %d bytes)', path, len(entries), offset)
    return path


def _read_manifest(path):
    try:
        manifest = json.loads(Path(path).read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointCorruptError(f'Checkpoint manifest {path} is unreadable: {exc}') from exc
    if not isinstance(manifest, dict):
        raise CheckpointCorruptError(f'Checkpoint manifest {path} is not a JSON object')
    version = manifest.get('format_version')
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f'Checkpoint {path} has format version {version}; this build reads version {FORMAT_VERSION}'
        )
    return manifest


def load_checkpoint(path):
    """Read and validate a checkpoint written by save_checkpoint."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f'Checkpoint {path} does not exist')
    manifest = _read_manifest(path)
    blob = path.parent / manifest.get('blob', blob_path(path).name)
    if not blob.exists():
        raise CheckpointCorruptError(f'Checkpoint blob {blob} is missing')
    data = blob.read_bytes()

    arrays = {}
    spans = []
    try:
        for entry in manifest['entries']:
            name = entry['name']
            if name in arrays:
                raise CheckpointCorruptError(f'Checkpoint lists {name} twice')
            dtype = DTYPES[entry['dtype']]
            shape = tuple(int(v) for v in entry['shape'])
            start = int(entry['offset'])
            end = start + int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
            if start < 0 or end > len(data):
                raise CheckpointCorruptError(
                    f'Checkpoint blob {blob} is truncated: {name} needs bytes {start}..{end}, blob has {len(data)}'
                )
            spans.append((start, end, name))
            native = dtype.newbyteorder('=')
            count = (end - start) // dtype.itemsize
            arrays[name] = np.frombuffer(data, dtype=dtype, count=count, offset=start).astype(native).reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointCorruptError(f'Checkpoint manifest {path} has a malformed entry: {exc}') from exc

    spans.sort()
    for (_, end, name), (start, _, following) in zip(spans, spans[1:]):
        if start < end:
            raise CheckpointCorruptError(f'Checkpoint entries {name} and {following} overlap')
    return Checkpoint(manifest=manifest, arrays=arrays)


def restore_model(checkpoint, key, model):
    """Copy stored values into ``model``; every parameter must be present exactly once."""
    stored = checkpoint.model_arrays(key)
    parameters = dict(model.named_parameters())
    unknown = sorted(set(stored) - set(parameters))
    if unknown:
        raise UnknownParameterError(f'Checkpoint has parameters the {key} does not: {", ".join(unknown)}')
    missing = sorted(set(parameters) - set(stored))
    if missing:
        raise CheckpointCorruptError(f'Checkpoint lacks {key} parameters: {", ".join(missing)}')
    for name, parameter in parameters.items():
        value = stored[name]
        if value.shape != parameter.shape:
            raise CheckpointCorruptError(
                f'{key}.{name} stored with shape {value.shape}, model expects {parameter.shape}'
            )
        parameter.value = value.astype(parameter.value.dtype, copy=True)
        parameter.grad = np.zeros_like(parameter.value)
    return model


def restore_optimizer(checkpoint, key, optimizer):
    hyperparameters = checkpoint.manifest.get('optimizers', {}).get(key)
    if hyperparameters is None:
        raise CheckpointCorruptError(f'Checkpoint has no state for optimizer {key}')
    states = []
    for parameter in optimizer.parameters:
        try:
            m = checkpoint.arrays[f'optimizer.{key}.m.{parameter.name}']
            v = checkpoint.arrays[f'optimizer.{key}.v.{parameter.name}']
        except KeyError as exc:
            raise CheckpointCorruptError(f'Checkpoint lacks optimizer moment {exc.args[0]}') from exc
        states.append(AdamState(m.copy(), v.copy()))
    optimizer.states = states
    optimizer.lr = hyperparameters['lr']
    optimizer.beta1 = hyperparameters['beta1']
    optimizer.beta2 = hyperparameters['beta2']
    optimizer.eps = hyperparameters['eps']
    optimizer.t = hyperparameters['t']
    return optimizer


def restore_rng(checkpoint):
    state = checkpoint.manifest.get('rng')
    if state is None:
        raise CheckpointCorruptError('Checkpoint has no random generator state')
    bit_generator = np.random.PCG64()
    bit_generator.state = state
    return np.random.Generator(bit_generator)
