"""Classical image-forensics baselines: residual fingerprints and spectral slopes."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import median_filter

DEFAULT_FIT_BAND = (0.25, 0.5)


# --- PGM I/O (binary P5, 8-bit) ---


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and '#' comment lines, PNM style
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c in b" \t\r\n":
            pos += 1
        elif c == b"#":
            while pos < n and data[pos:pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos:pos + 1] not in b" \t\r\n":
        pos += 1
    if start == pos:
        raise ValueError("truncated PGM header")
    return data[start:pos], pos


def load_pgm(path) -> np.ndarray:
    """Read a binary 8-bit PGM into a float64 (H, W) array scaled to [0, 1]."""
    with open(path, "rb") as f:
        data = f.read()
    magic, pos = _next_token(data, 0)
    if magic != b"P5":
        raise ValueError(f"not a binary PGM (P5): magic {magic!r}")
    w_tok, pos = _next_token(data, pos)
    h_tok, pos = _next_token(data, pos)
    max_tok, pos = _next_token(data, pos)
    width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}; need 255")
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be positive")
    pos += 1  # exactly one whitespace byte separates header and raster
    raster = data[pos:]
    if len(raster) < width * height:
        raise ValueError(f"truncated raster: want {width * height} bytes, "
                         f"have {len(raster)}")
    if len(raster) > width * height:
        raise ValueError("trailing bytes after raster")
    img = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return img.astype(np.float64) / 255.0


def write_pgm(img: np.ndarray, path) -> None:
    """Write a [0, 1] float image as binary 8-bit PGM (values rounded)."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("image must be 2-D grayscale")
    quant = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    h, w = quant.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(quant.tobytes())


# --- residual fingerprints ---


def denoise(img: np.ndarray) -> np.ndarray:
    """3x3 median filter with edge replication at the borders."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("image must be 2-D grayscale")
    return median_filter(arr, size=3, mode="nearest")


def residual(img: np.ndarray) -> np.ndarray:
    """High-frequency content the denoiser removes: img - denoise(img)."""
    arr = np.asarray(img, dtype=np.float64)
    return arr - denoise(arr)


def marra_fingerprint(images) -> np.ndarray:
    """Per-model fingerprint: the mean of the images' denoising residuals."""
    imgs = list(images)
    if not imgs:
        raise ValueError("need at least one image")
    shape = np.asarray(imgs[0]).shape
    acc = np.zeros(shape, dtype=np.float64)
    for im in imgs:
        arr = np.asarray(im, dtype=np.float64)
        if arr.shape != shape:
            raise ValueError(f"image shape {arr.shape} != {shape}")
        acc += residual(arr)
    return acc / len(imgs)


def _centered_corr(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.linalg.norm(xc) * np.linalg.norm(yc)
    if denom == 0:
        return -np.inf  # constant side carries no signal; rank it last
    return float(np.dot(xc.ravel(), yc.ravel()) / denom)


def marra_attribute(query_img: np.ndarray, fingerprints: dict[int, np.ndarray]) -> list[int]:
    """Rank models by Pearson correlation between the query's residual and each
    fingerprint, descending; exact ties broken by ascending model id."""
    if not fingerprints:
        raise ValueError("no fingerprints to rank against")
    q = residual(query_img)
    scored = []
    for model in sorted(fingerprints):
        fp = np.asarray(fingerprints[model], dtype=np.float64)
        if fp.shape != q.shape:
            raise ValueError(f"fingerprint for model {model} has shape {fp.shape}, "
                             f"query residual has {q.shape}")
        scored.append((model, _centered_corr(q, fp)))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return [m for m, _ in scored]


# --- reduced spectra ---


def reduced_spectrum(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Azimuthally averaged power spectrum of a square image.

    Power |F|^2 at each DFT index pair is binned by the rounded radial index
    j = round(sqrt(u~^2 + v~^2)) (centered indices), j = 1 .. side/2; the DC
    term is excluded. Returns (freqs, power) with freqs[j-1] = j / side.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("need a square 2-D image")
    side = arr.shape[0]
    if side < 4 or side % 2 != 0:
        raise ValueError("side must be even and >= 4")
    power = np.abs(np.fft.fft2(arr)) ** 2
    idx = np.fft.fftfreq(side) * side  # centered integer indices -side/2..side/2-1
    r = np.sqrt(idx[:, None] ** 2 + idx[None, :] ** 2)
    bins = np.rint(r).astype(np.int64)
    n_bins = side // 2
    sums = np.zeros(n_bins + 1, dtype=np.float64)
    counts = np.zeros(n_bins + 1, dtype=np.int64)
    valid = (bins >= 1) & (bins <= n_bins)
    np.add.at(sums, bins[valid], power[valid])
    np.add.at(counts, bins[valid], 1)
    freqs = np.arange(1, n_bins + 1, dtype=np.float64) / side
    return freqs, sums[1:] / counts[1:]


def fit_power_law(freqs, power, band: tuple[float, float] = DEFAULT_FIT_BAND) -> tuple[float, float]:
    """Least-squares fit of p = a * f^(-b) on log-log axes over the band
    (f_lo, f_hi]; returns (a, b)."""
    f = np.asarray(freqs, dtype=np.float64)
    p = np.asarray(power, dtype=np.float64)
    if f.shape != p.shape or f.ndim != 1:
        raise ValueError("freqs and power must be matching 1-D arrays")
    lo, hi = band
    if not lo < hi:
        raise ValueError("band must satisfy lo < hi")
    mask = (f > lo) & (f <= hi)
    if mask.sum() < 2:
        raise ValueError("need at least two bins inside the fit band")
    if np.any(p[mask] <= 0):
        raise ValueError("power must be positive inside the fit band")
    slope, intercept = np.polyfit(np.log(f[mask]), np.log(p[mask]), 1)
    return float(np.exp(intercept)), float(-slope)


def dzanic_signature(images, band: tuple[float, float] = DEFAULT_FIT_BAND) -> np.ndarray:
    """Model signature: per-image (log a, b) of the reduced-spectrum power-law
    fit, averaged over the images."""
    imgs = list(images)
    if not imgs:
        raise ValueError("need at least one image")
    acc = np.zeros(2, dtype=np.float64)
    for im in imgs:
        freqs, power = reduced_spectrum(im)
        a, b = fit_power_law(freqs, power, band)
        acc += (np.log(a), b)
    return acc / len(imgs)


def dzanic_attribute(query_img: np.ndarray, signatures: dict[int, np.ndarray],
                     band: tuple[float, float] = DEFAULT_FIT_BAND) -> list[int]:
    """Rank models by Euclidean distance in (log a, b) space, ascending;
    ties by ascending model id."""
    if not signatures:
        raise ValueError("no signatures to rank against")
    freqs, power = reduced_spectrum(query_img)
    a, b = fit_power_law(freqs, power, band)
    q = np.array([np.log(a), b])
    scored = []
    for model in sorted(signatures):
        sig = np.asarray(signatures[model], dtype=np.float64)
        scored.append((model, float(np.linalg.norm(q - sig))))
    scored.sort(key=lambda t: (t[1], t[0]))
    return [m for m, _ in scored]
