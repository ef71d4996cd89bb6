"""Vote aggregation: evidence tensors in, presence maps out.

Four interchangeable backends compute the same map:

* ``scatter`` — the reference loop: every region offset pushes a shifted
  window of its evidence channel into the output. Naive but exact.
* ``gather``  — pull formulation over a zero-padded copy of the evidence;
  out-of-bounds reads become zeros instead of clipped writes.
* ``kernel``  — each channel is convolved with its region kernel via FFT and
  the full convolution is center-cropped; the fast path.
* ``sparse``  — scatter restricted to the nonzero bounding box per channel
  after thresholding small entries; bit-identical to scatter on the
  thresholded tensor.

Votes whose target falls outside the map are dropped. Accumulation happens
in float64; presence maps are emitted as float32.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.fft

try:
    import numba
except ImportError:  # engine still works, gather just runs the numpy path
    numba = None

from .errors import ShapeMismatch, UnknownBackend
from .fields import KernelBank, VoteField, materialize_kernels

BACKENDS = ("scatter", "gather", "kernel", "sparse")


def _as_evidence(E, field: VoteField) -> np.ndarray:
    E = np.asarray(E)
    if E.ndim != 3:
        raise ShapeMismatch(f"evidence tensor must be HxWxR, got shape {E.shape}")
    if E.shape[2] != field.R:
        raise ShapeMismatch(f"evidence has {E.shape[2]} regions, field has {field.R}")
    return E


def _clipped_windows(dy: int, dx: int, H: int, W: int):
    """Destination / source index bounds for a shift by (dy, dx), or None."""
    y0d, y1d = max(dy, 0), H + min(dy, 0)
    x0d, x1d = max(dx, 0), W + min(dx, 0)
    if y1d <= y0d or x1d <= x0d:
        return None
    return (y0d, y1d, x0d, x1d, y0d - dy, y1d - dy, x0d - dx, x1d - dx)


def vote_scatter(E, field: VoteField) -> np.ndarray:
    """Push votes: for each region offset, add the shifted evidence window."""
    E = _as_evidence(E, field)
    H, W = E.shape[:2]
    out = np.zeros((H, W), dtype=np.float64)
    for r, offs in enumerate(field.offsets):
        ch = E[:, :, r].astype(np.float64) / field.counts[r]
        for dy, dx in offs:
            win = _clipped_windows(int(dy), int(dx), H, W)
            if win is None:
                continue
            y0d, y1d, x0d, x1d, y0s, y1s, x0s, x1s = win
            out[y0d:y1d, x0d:x1d] += ch[y0s:y1s, x0s:x1s]
    return out.astype(np.float32)


if numba is not None:

    @numba.njit(cache=True)
    def _gather_rows(pad, regs, dys, dxs, ws, m, out):
        # Row-major pull: the output row stays cache-hot while every tap
        # streams one contiguous padded-evidence row past it. Per-element
        # accumulation order is the same as the numpy fallback's.
        H, W = out.shape
        for y in range(H):
            row = out[y]
            for t in range(regs.shape[0]):
                src = pad[regs[t], y + m - dys[t]]
                w = ws[t]
                o = m - dxs[t]
                for x in range(W):
                    row[x] += w * src[x + o]


def _flat_taps(field: VoteField):
    regs = np.concatenate([np.full(field.counts[r], r, dtype=np.int64)
                           for r in range(field.R)])
    offs = np.concatenate(field.offsets, axis=0)
    ws = np.concatenate([np.full(field.counts[r], 1.0 / field.counts[r])
                         for r in range(field.R)])
    return regs, offs[:, 0].copy(), offs[:, 1].copy(), ws


def vote_gather(E, field: VoteField) -> np.ndarray:
    """Pull votes from a zero-padded evidence copy; matches scatter to 1e-6."""
    E = _as_evidence(E, field)
    H, W = E.shape[:2]
    m = field.max_radius
    out = np.zeros((H, W), dtype=np.float64)
    if numba is not None:
        # Reads stay in the input precision; accumulation is float64 either way.
        pad_dtype = np.float32 if E.dtype == np.float32 else np.float64
        pad = np.zeros((field.R, H + 2 * m, W + 2 * m), dtype=pad_dtype)
        pad[:, m:m + H, m:m + W] = np.moveaxis(E, 2, 0)
        regs, dys, dxs, ws = _flat_taps(field)
        _gather_rows(pad, regs, dys, dxs, ws, m, out)
    else:
        pad = np.zeros((H + 2 * m, W + 2 * m), dtype=np.float64)
        for r, offs in enumerate(field.offsets):
            pad[m:m + H, m:m + W] = E[:, :, r]
            w = 1.0 / field.counts[r]
            for dy, dx in offs:
                out += pad[m - dy:m - dy + H, m - dx:m - dx + W] * w
    return out.astype(np.float32)


def _kernel_spectra(bank: KernelBank, fshape) -> np.ndarray:
    return scipy.fft.rfftn(bank.kernels, fshape, axes=(1, 2))


def _fft_shape(H: int, W: int, side: int):
    full = (H + side - 1, W + side - 1)
    return tuple(scipy.fft.next_fast_len(n) for n in full), full


def _vote_kernel_fft(E, bank: KernelBank, fshape, full, spectra) -> np.ndarray:
    H, W = E.shape[:2]
    channels = np.ascontiguousarray(np.moveaxis(E, 2, 0), dtype=np.float64)
    ef = scipy.fft.rfftn(channels, fshape, axes=(1, 2))
    acc = np.einsum("rij,rij->ij", ef, spectra)
    conv = scipy.fft.irfft2(acc, fshape)[:full[0], :full[1]]
    c = (bank.field_side - 1) // 2
    return conv[c:c + H, c:c + W].astype(np.float32)


# Classes per batched FFT call; amortizes transform setup without
# overflowing cache (measured sweet spot on small-core machines).
_KERNEL_CHUNK = 4


def _vote_kernel_fft_stack(E_chunk, bank: KernelBank, fshape, full, spectra) -> np.ndarray:
    k, H, W = E_chunk.shape[:3]
    channels = np.ascontiguousarray(np.moveaxis(E_chunk, 3, 1), dtype=np.float64)
    ef = scipy.fft.rfftn(channels.reshape(k * bank.R, H, W), fshape, axes=(1, 2))
    ef = ef.reshape(k, bank.R, *ef.shape[1:])
    acc = np.einsum("krij,rij->kij", ef, spectra)
    conv = scipy.fft.irfftn(acc, fshape, axes=(1, 2))[:, :full[0], :full[1]]
    c = (bank.field_side - 1) // 2
    return conv[:, c:c + H, c:c + W].astype(np.float32)


def vote_kernelbank(E, bank: KernelBank) -> np.ndarray:
    """Convolve each channel with its region kernel and center-crop.

    Stride-1 transposed convolution with zero padding is plain convolution
    with the same (symmetric-grid) kernel; cropping the full output back to
    HxW about the center drops exactly the out-of-bounds votes.
    """
    E = np.asarray(E)
    if E.ndim != 3:
        raise ShapeMismatch(f"evidence tensor must be HxWxR, got shape {E.shape}")
    if E.shape[2] != bank.R:
        raise ShapeMismatch(f"evidence has {E.shape[2]} regions, bank has {bank.R}")
    fshape, full = _fft_shape(E.shape[0], E.shape[1], bank.field_side)
    spectra = _kernel_spectra(bank, fshape)
    return _vote_kernel_fft(E, bank, fshape, full, spectra)


def vote_sparse(E, field: VoteField, threshold: float = 0.0) -> np.ndarray:
    """Scatter after zeroing entries with ``|e| < threshold``.

    Work is restricted to each channel's nonzero bounding box, which leaves
    the result bit-identical to ``vote_scatter`` on the thresholded tensor
    (skipped additions all contribute exact zeros).
    """
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    E = _as_evidence(E, field)
    H, W = E.shape[:2]
    out = np.zeros((H, W), dtype=np.float64)
    for r, offs in enumerate(field.offsets):
        ch = E[:, :, r].astype(np.float64)
        if threshold > 0:
            ch = np.where(np.abs(ch) < threshold, 0.0, ch)
        rows = np.flatnonzero(ch.any(axis=1))
        if rows.size == 0:
            continue
        cols = np.flatnonzero(ch.any(axis=0))
        i0, i1 = int(rows[0]), int(rows[-1]) + 1
        j0, j1 = int(cols[0]), int(cols[-1]) + 1
        box = ch[i0:i1, j0:j1] / field.counts[r]
        for dy, dx in offs:
            y0d = max(i0 + int(dy), 0)
            y1d = min(i1 + int(dy), H)
            x0d = max(j0 + int(dx), 0)
            x1d = min(j1 + int(dx), W)
            if y1d <= y0d or x1d <= x0d:
                continue
            out[y0d:y1d, x0d:x1d] += box[y0d - dy - i0:y1d - dy - i0,
                                         x0d - dx - j0:x1d - dx - j0]
    return out.astype(np.float32)


def vote(E, field: VoteField, backend: str = "scatter", *,
         threshold: float = 0.0, bank: KernelBank | None = None) -> np.ndarray:
    """Dispatch to a voting backend by name."""
    if backend == "scatter":
        return vote_scatter(E, field)
    if backend == "gather":
        return vote_gather(E, field)
    if backend == "kernel":
        return vote_kernelbank(E, bank if bank is not None else materialize_kernels(field))
    if backend == "sparse":
        return vote_sparse(E, field, threshold)
    raise UnknownBackend(f"unknown backend {backend!r}; expected one of {BACKENDS}")


def vote_all_classes(E_stack, field: VoteField, backend: str = "scatter", *,
                     threshold: float = 0.0, threads: int = 1) -> np.ndarray:
    """Vote each class of a CxHxWxR stack independently; returns CxHxW.

    Classes share the read-only field (and kernel spectra, for the kernel
    backend) and may be processed by a thread pool; per-class results do not
    depend on the thread count.
    """
    E_stack = np.asarray(E_stack)
    if E_stack.ndim != 4:
        raise ShapeMismatch(f"class stack must be CxHxWxR, got shape {E_stack.shape}")
    if E_stack.shape[3] != field.R:
        raise ShapeMismatch(f"evidence has {E_stack.shape[3]} regions, field has {field.R}")
    if backend not in BACKENDS:
        raise UnknownBackend(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    C, H, W = E_stack.shape[:3]

    out = np.empty((C, H, W), dtype=np.float32)
    if backend == "kernel":
        bank = materialize_kernels(field)
        fshape, full = _fft_shape(H, W, bank.field_side)
        spectra = _kernel_spectra(bank, fshape)
        starts = range(0, C, _KERNEL_CHUNK)

        def run_chunk(c0):
            c1 = min(c0 + _KERNEL_CHUNK, C)
            return _vote_kernel_fft_stack(E_stack[c0:c1], bank, fshape, full, spectra)

        if threads > 1 and len(starts) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for c0, maps in zip(starts, pool.map(run_chunk, starts)):
                    out[c0:c0 + maps.shape[0]] = maps
        else:
            for c0 in starts:
                maps = run_chunk(c0)
                out[c0:c0 + maps.shape[0]] = maps
        return out

    def run(c):
        return vote(E_stack[c], field, backend, threshold=threshold)

    if threads > 1 and C > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for c, m in enumerate(pool.map(run, range(C))):
                out[c] = m
    else:
        for c in range(C):
            out[c] = run(c)
    return out


def feature_diff(ref, aux) -> np.ndarray:
    """Motion features: reference-frame features minus auxiliary-frame features."""
    ref = np.asarray(ref)
    aux = np.asarray(aux)
    if ref.shape != aux.shape:
        raise ShapeMismatch(f"feature maps differ in shape: {ref.shape} vs {aux.shape}")
    return ref - aux


def vote_spatiotemporal(E_vis, E_temp, field_vis: VoteField, field_temp: VoteField,
                        backend: str = "scatter") -> np.ndarray:
    """Sum of the spatial vote and the temporal (motion) vote."""
    E_vis = _as_evidence(E_vis, field_vis)
    E_temp = _as_evidence(E_temp, field_temp)
    if E_vis.shape[:2] != E_temp.shape[:2]:
        raise ShapeMismatch(
            f"visual and temporal evidence differ in size: {E_vis.shape[:2]} vs {E_temp.shape[:2]}"
        )
    return vote(E_vis, field_vis, backend) + vote(E_temp, field_temp, backend)


@dataclass(frozen=True)
class ScalableMixWeights:
    """ReLU + 3x3 convolution weights mixing N shared voting maps into C classes.

    ``conv3x3`` has shape (C, N, 3, 3); ``bias`` has shape (C,). Applied as a
    same-padding correlation (no kernel flip) with zero padding at borders.
    """

    conv3x3: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        conv = np.asarray(self.conv3x3, dtype=np.float64)
        bias = np.asarray(self.bias, dtype=np.float64)
        if conv.ndim != 4 or conv.shape[2:] != (3, 3):
            raise ShapeMismatch(f"conv3x3 must be CxNx3x3, got shape {conv.shape}")
        if bias.shape != (conv.shape[0],):
            raise ShapeMismatch(f"bias must have shape ({conv.shape[0]},), got {bias.shape}")
        object.__setattr__(self, "conv3x3", conv)
        object.__setattr__(self, "bias", bias)

    @property
    def n_classes(self) -> int:
        return self.conv3x3.shape[0]

    @property
    def n_channels(self) -> int:
        return self.conv3x3.shape[1]


def vote_scalable(E_shared, field: VoteField, mix: ScalableMixWeights,
                  backend: str = "scatter", *, threads: int = 1) -> np.ndarray:
    """Class-count-independent voting: N shared channels mixed into C maps.

    The N evidence tensors are voted as usual, the resulting maps pass
    through a ReLU, and a 3x3 same-padding convolution with ``mix`` produces
    the C presence maps.
    """
    E_shared = np.asarray(E_shared)
    if E_shared.ndim != 4:
        raise ShapeMismatch(f"shared evidence must be NxHxWxR, got shape {E_shared.shape}")
    if E_shared.shape[0] != mix.n_channels:
        raise ShapeMismatch(
            f"evidence has {E_shared.shape[0]} channels, mix weights expect {mix.n_channels}"
        )
    maps = vote_all_classes(E_shared, field, backend, threads=threads)
    maps = np.maximum(maps, 0.0).astype(np.float64)

    N, H, W = maps.shape
    padded = np.zeros((N, H + 2, W + 2), dtype=np.float64)
    padded[:, 1:-1, 1:-1] = maps
    windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3), axis=(1, 2))
    out = np.einsum("cnuv,nhwuv->chw", mix.conv3x3, windows, optimize=True)
    out += mix.bias[:, None, None]
    return out.astype(np.float32)
