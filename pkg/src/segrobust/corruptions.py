"""The 15 common-corruption kernels at 5 severities each.

Severity constants live in data/corruption_params.json (versioned); every
stochastic kernel draws exclusively from the SplitMix64 stream seeded by the
spec, so equal (image, spec, table) gives bit-equal output. All kernels
preserve shape and clamp to [0,1].
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from PIL import Image
from scipy import ndimage

from .core.imageio import quantize_unit_to_u8
from .core.rng import BulkRng, DeterministicRng
from .core.types import ImageTensor
from .errors import (
    KernelLargerThanImageError,
    ParseError,
    SeverityOutOfRangeError,
    UnknownKindError,
)

CORRUPTION_KINDS = (
    "gaussian_noise",
    "shot_noise",
    "impulse_noise",
    "defocus_blur",
    "glass_blur",
    "motion_blur",
    "zoom_blur",
    "snow",
    "frost",
    "fog",
    "brightness",
    "contrast",
    "elastic",
    "pixelate",
    "jpeg",
)

NOISE_KINDS = ("gaussian_noise", "shot_noise", "impulse_noise")
BLUR_KINDS = ("defocus_blur", "glass_blur", "motion_blur", "zoom_blur")

# Primary intensity axis per kind: (param, +1 non-decreasing / -1 non-increasing).
_MONOTONE_AXES = {
    "gaussian_noise": ("sigma", +1),
    "shot_noise": ("lambda", -1),
    "impulse_noise": ("rate", +1),
    "defocus_blur": ("radius", +1),
    "glass_blur": ("sigma", +1),
    "motion_blur": ("sigma", +1),
    "zoom_blur": ("max_zoom", +1),
    "snow": ("loc", +1),
    "frost": ("frost_weight", +1),
    "fog": ("alpha", +1),
    "brightness": ("shift", +1),
    "contrast": ("factor", -1),
    "elastic": ("alpha_frac", +1),
    "pixelate": ("divisor", +1),
    "jpeg": ("quality", -1),
}


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    severity: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in CORRUPTION_KINDS:
            raise UnknownKindError(f"unknown corruption kind {self.kind!r}")
        if not 1 <= self.severity <= 5:
            raise SeverityOutOfRangeError(f"severity {self.severity} outside 1..5")


class CorruptionParamTable:
    """Complete 15x5 grid of kernel constants, monotone along each intensity axis."""

    def __init__(self, table: dict):
        self._table = {}
        for kind in CORRUPTION_KINDS:
            if kind not in table:
                raise ParseError(f"parameter table missing kind {kind!r}")
            per_kind = {}
            for sev in range(1, 6):
                key = str(sev)
                if key not in table[kind]:
                    raise ParseError(f"parameter table missing {kind}[{sev}]")
                params = table[kind][key]
                for name, val in params.items():
                    if not np.isfinite(val):
                        raise ParseError(f"{kind}[{sev}].{name} is not finite")
                per_kind[sev] = dict(params)
            param, direction = _MONOTONE_AXES[kind]
            seq = [per_kind[sev][param] for sev in range(1, 6)]
            diffs = np.diff(seq) * direction
            if (diffs < 0).any():
                raise ParseError(f"{kind}.{param} not monotone across severities: {seq}")
            self._table[kind] = per_kind

    def params(self, kind: str, severity: int) -> dict:
        if kind not in self._table:
            raise UnknownKindError(f"unknown corruption kind {kind!r}")
        if not 1 <= severity <= 5:
            raise SeverityOutOfRangeError(f"severity {severity} outside 1..5")
        return self._table[kind][severity]

    @classmethod
    def from_file(cls, path) -> "CorruptionParamTable":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as e:
                raise ParseError(f"parameter table is not valid JSON: {e}") from e
        obj.pop("version", None)
        return cls(obj)

    @classmethod
    def default(cls) -> "CorruptionParamTable":
        text = resources.files("segrobust.data").joinpath("corruption_params.json").read_text()
        obj = json.loads(text)
        obj.pop("version", None)
        return cls(obj)


# --------------------------------------------------------------------------
# shared image helpers
# --------------------------------------------------------------------------

def _check_kernel_fits(side: int, h: int, w: int, what: str) -> None:
    if side > min(h, w):
        raise KernelLargerThanImageError(
            f"{what} kernel side {side} exceeds min image side {min(h, w)}"
        )


def _conv_channels(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    for c in range(x.shape[2]):
        out[:, :, c] = ndimage.convolve(x[:, :, c], kernel, mode="mirror")
    return out


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-center bilinear resize; img is HxW or HxWxC."""
    h, w = img.shape[:2]
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    return _bilinear_grid_sample(img, ys[:, None] + np.zeros((1, out_w)),
                                 xs[None, :] + np.zeros((out_h, 1)))


def _bilinear_grid_sample(img: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample img at float coordinates with edge clamping."""
    h, w = img.shape[:2]
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)
    wx = np.clip(xs - x0, 0.0, 1.0)
    if img.ndim == 3:
        wy = wy[..., None]
        wx = wx[..., None]
    top = img[y0, x0] * (1 - wx) + img[y0, x1] * wx
    bot = img[y1, x0] * (1 - wx) + img[y1, x1] * wx
    return top * (1 - wy) + bot * wy


def _line_kernel(length: int, sigma: float, angle_deg: float) -> np.ndarray:
    """Gaussian-weighted line of `length` pixels rotated to angle_deg."""
    size = length if length % 2 == 1 else length + 1
    k = np.zeros((size, size), dtype=np.float64)
    center = size // 2
    offs = np.arange(length) - (length - 1) / 2.0
    weights = np.exp(-(offs**2) / (2.0 * sigma * sigma))
    start = center - length // 2
    k[center, start:start + length] = weights
    if angle_deg % 360 != 0:
        k = ndimage.rotate(k, angle_deg, reshape=False, order=1, mode="constant", cval=0.0)
        k = np.clip(k, 0.0, None)
    return k / k.sum()


def plasma_fractal(rng: BulkRng, mapsize: int, wibble_decay: float) -> np.ndarray:
    """Diamond-square heightmap in [0,1], normalized by its own maximum."""
    assert mapsize & (mapsize - 1) == 0, "mapsize must be a power of two"
    maparray = np.zeros((mapsize, mapsize), dtype=np.float64)
    stepsize = mapsize
    wibble = 100.0

    def wibbled_mean(arr):
        return arr / 4.0 + wibble * (rng.uniforms(arr.shape) - 0.5)

    def fill_squares():
        cornerref = maparray[0:mapsize:stepsize, 0:mapsize:stepsize]
        squareaccum = cornerref + np.roll(cornerref, 1, axis=0)
        squareaccum += np.roll(squareaccum, 1, axis=1)
        maparray[stepsize // 2:mapsize:stepsize,
                 stepsize // 2:mapsize:stepsize] = wibbled_mean(squareaccum)

    def fill_diamonds():
        drgrid = maparray[stepsize // 2:mapsize:stepsize, stepsize // 2:mapsize:stepsize]
        ulgrid = maparray[0:mapsize:stepsize, 0:mapsize:stepsize]
        ldrsum = drgrid + np.roll(drgrid, 1, axis=0)
        lulsum = ulgrid + np.roll(ulgrid, -1, axis=1)
        ltsum = ldrsum + lulsum
        maparray[0:mapsize:stepsize, stepsize // 2:mapsize:stepsize] = wibbled_mean(ltsum)
        tdrsum = drgrid + np.roll(drgrid, 1, axis=1)
        tulsum = ulgrid + np.roll(ulgrid, -1, axis=0)
        ttsum = tdrsum + tulsum
        maparray[stepsize // 2:mapsize:stepsize, 0:mapsize:stepsize] = wibbled_mean(ttsum)

    while stepsize >= 2:
        fill_squares()
        fill_diamonds()
        stepsize //= 2
        wibble /= wibble_decay

    maparray -= maparray.min()
    return maparray / maparray.max()


def rgb_to_hsv(x: np.ndarray) -> np.ndarray:
    """Vectorized RGB->HSV with V = max(R,G,B); H in [0,1)."""
    r, g, b = x[..., 0], x[..., 1], x[..., 2]
    v = x.max(axis=-1)
    mn = x.min(axis=-1)
    c = v - mn
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    h = np.zeros_like(v)
    nz = c > 0
    rmax = nz & (v == r)
    gmax = nz & (v == g) & ~rmax
    bmax = nz & ~rmax & ~gmax
    cc = np.where(nz, c, 1.0)
    h = np.where(rmax, ((g - b) / cc) % 6.0, h)
    h = np.where(gmax, (b - r) / cc + 2.0, h)
    h = np.where(bmax, (r - g) / cc + 4.0, h)
    return np.stack([h / 6.0, s, v], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv[..., 0] * 6.0, hsv[..., 1], hsv[..., 2]
    c = v * s
    hp = h % 6.0
    xcomp = c * (1.0 - np.abs(hp % 2.0 - 1.0))
    m = v - c
    z = np.zeros_like(c)
    sector = np.floor(hp).astype(np.int64) % 6
    r = np.choose(sector, [c, xcomp, z, z, xcomp, c])
    g = np.choose(sector, [xcomp, c, c, xcomp, z, z])
    b = np.choose(sector, [z, z, xcomp, c, c, xcomp])
    return np.stack([r + m, g + m, b + m], axis=-1)


def _luma(x: np.ndarray) -> np.ndarray:
    return 0.299 * x[..., 0] + 0.587 * x[..., 1] + 0.114 * x[..., 2]


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


# --------------------------------------------------------------------------
# kernels (x: HxWx3 float64 in [0,1]; return unclipped-then-clamped array)
# --------------------------------------------------------------------------

def _k_gaussian_noise(x, p, rng):
    return x + p["sigma"] * rng.gaussians(x.shape)


def _k_shot_noise(x, p, rng):
    lam = float(p["lambda"])
    return rng.poissons(x * lam).astype(np.float64) / lam


def _k_impulse_noise(x, p, rng):
    rate = p["rate"]
    u = rng.uniforms(x.shape)
    out = np.where(u < rate / 2.0, 0.0, x)
    return np.where(u > 1.0 - rate / 2.0, 1.0, out)


def _k_defocus_blur(x, p, rng):
    radius = int(p["radius"])
    side = 2 * radius + 1
    _check_kernel_fits(side, x.shape[0], x.shape[1], "defocus")
    yy, xx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    disk = ((yy * yy + xx * xx) <= radius * radius).astype(np.float64)
    if p.get("alias_sigma", 0) > 0:
        disk = ndimage.gaussian_filter(disk, p["alias_sigma"])
    disk /= disk.sum()
    return _conv_channels(x, disk)


def _k_glass_blur(x, p, rng):
    h, w = x.shape[:2]
    win = int(p["window"])
    out = np.empty_like(x)
    for c in range(3):
        out[:, :, c] = ndimage.gaussian_filter(x[:, :, c], p["sigma"], mode="mirror")
    iters = int(p["iterations"])
    if h > 2 * win and w > 2 * win:
        rows = np.arange(h - win - 1, win - 1, -1)
        cols = np.arange(w - win - 1, win - 1, -1)
        for _ in range(iters):
            # one seeded offset pair per visited pixel, scan order fixed
            d = rng.integers(-win, win, (rows.size, cols.size, 2))
            for i, hh in enumerate(rows):
                for j, ww in enumerate(cols):
                    dy, dx = int(d[i, j, 0]), int(d[i, j, 1])
                    hp, wp = hh + dy, ww + dx
                    tmp = out[hh, ww].copy()
                    out[hh, ww] = out[hp, wp]
                    out[hp, wp] = tmp
    return out


def _k_motion_blur(x, p, rng):
    length = int(p["length"])
    _check_kernel_fits(length, x.shape[0], x.shape[1], "motion")
    angle = rng.uniforms(1)[0] * 90.0 - 45.0
    kernel = _line_kernel(length, float(p["sigma"]), float(angle))
    return _conv_channels(x, kernel)


def _k_zoom_blur(x, p, rng):
    h, w = x.shape[:2]
    factors = []
    f = 1.0
    while f <= p["max_zoom"] + 1e-9:
        factors.append(f)
        f += p["step"]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    gy, gx = np.mgrid[0:h, 0:w].astype(np.float64)
    acc = np.zeros_like(x)
    for f in factors:
        ys = cy + (gy - cy) / f
        xs = cx + (gx - cx) / f
        acc += _bilinear_grid_sample(x, ys, xs)
    return acc / len(factors)


def _k_snow(x, p, rng):
    h, w = x.shape[:2]
    z = float(p["flake_zoom"])
    fh, fw = max(1, int(np.ceil(h / z))), max(1, int(np.ceil(w / z)))
    layer = rng.gaussians((fh, fw)) * p["scale"] + p["loc"]
    layer = bilinear_resize(layer, h, w)
    layer[layer < p["threshold"]] = 0.0
    angle = rng.uniforms(1)[0] * 90.0 - 135.0
    length = int(p["blur_length"])
    if length < min(h, w):
        kernel = _line_kernel(length, float(p["blur_sigma"]), float(angle))
        layer = ndimage.convolve(layer, kernel, mode="constant", cval=0.0)
    layer = np.clip(layer, 0.0, 1.0)
    blend = p["blend"]
    lifted = np.maximum(x, (_luma(x) * 1.5 + 0.5)[..., None])
    base = blend * x + (1.0 - blend) * lifted
    return base + layer[..., None] + np.rot90(layer, 2)[..., None]


def _k_frost(x, p, rng):
    """Procedural seeded frost texture in place of the reference's photographs."""
    h, w = x.shape[:2]
    mapsize = _next_pow2(max(h, w, 2))
    crystals = plasma_fractal(rng, mapsize, 1.8)[:h, :w]
    spikes = (rng.uniforms((h, w)) > 0.98).astype(np.float64)
    length = max(3, min(h, w) // 8)
    if length % 2 == 0:
        length += 1
    angle = rng.uniforms(1)[0] * 180.0 - 90.0
    streaks = ndimage.convolve(spikes, _line_kernel(length, length / 3.0, float(angle)),
                               mode="constant", cval=0.0)
    smax = streaks.max()
    if smax > 0:
        streaks = streaks / smax
    frost = np.clip(0.7 * crystals * crystals + 0.9 * streaks, 0.0, 1.0)
    return p["image_weight"] * x + p["frost_weight"] * frost[..., None]


def _k_fog(x, p, rng):
    h, w = x.shape[:2]
    mapsize = _next_pow2(max(h, w, 2))
    field = plasma_fractal(rng, mapsize, float(p["wibble_decay"]))[:h, :w]
    a = p["alpha"]
    return (1.0 - a) * x + a * field[..., None]


def _k_brightness(x, p, rng):
    hsv = rgb_to_hsv(x)
    hsv[..., 2] = np.clip(hsv[..., 2] + p["shift"], 0.0, 1.0)
    return hsv_to_rgb(hsv)


def _k_contrast(x, p, rng):
    means = x.mean(axis=(0, 1), keepdims=True)
    return (x - means) * p["factor"] + means


def _k_elastic(x, p, rng):
    h, w = x.shape[:2]
    scale = min(h, w)
    alpha = p["alpha_frac"] * scale
    sigma = max(0.5, p["sigma_frac"] * scale)
    dy = ndimage.gaussian_filter(rng.uniforms((h, w)) * 2.0 - 1.0, sigma) * alpha
    dx = ndimage.gaussian_filter(rng.uniforms((h, w)) * 2.0 - 1.0, sigma) * alpha
    gy, gx = np.mgrid[0:h, 0:w].astype(np.float64)
    return _bilinear_grid_sample(x, gy + dy, gx + dx)


def _k_pixelate(x, p, rng):
    d = int(p["divisor"])
    h, w = x.shape[:2]
    out = np.empty_like(x)
    for by in range(0, h, d):
        for bx in range(0, w, d):
            block = x[by:by + d, bx:bx + d]
            # anchor-relative mean: blocks of equal values reproduce exactly,
            # which makes a second application the identity
            anchor = block[0, 0]
            out[by:by + d, bx:bx + d] = anchor + (block - anchor).mean(axis=(0, 1))
    return out


def _k_jpeg(x, p, rng):
    buf = io.BytesIO()
    Image.fromarray(quantize_unit_to_u8(x), mode="RGB").save(
        buf, format="JPEG", quality=int(p["quality"])
    )
    buf.seek(0)
    with Image.open(buf) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


_KERNELS = {
    "gaussian_noise": _k_gaussian_noise,
    "shot_noise": _k_shot_noise,
    "impulse_noise": _k_impulse_noise,
    "defocus_blur": _k_defocus_blur,
    "glass_blur": _k_glass_blur,
    "motion_blur": _k_motion_blur,
    "zoom_blur": _k_zoom_blur,
    "snow": _k_snow,
    "frost": _k_frost,
    "fog": _k_fog,
    "brightness": _k_brightness,
    "contrast": _k_contrast,
    "elastic": _k_elastic,
    "pixelate": _k_pixelate,
    "jpeg": _k_jpeg,
}


def apply_corruption(image: ImageTensor, spec: CorruptionSpec,
                     table: CorruptionParamTable | None = None) -> ImageTensor:
    if table is None:
        table = CorruptionParamTable.default()
    params = table.params(spec.kind, spec.severity)
    rng = BulkRng(spec.seed)
    out = _KERNELS[spec.kind](image.data, params, rng)
    return ImageTensor(np.clip(out, 0.0, 1.0))


def severity_profile(image: ImageTensor, kind: str,
                     table: CorruptionParamTable | None = None,
                     seed: int = 0) -> list[ImageTensor]:
    """All five severities of one kind, each on its own derived sub-seed."""
    master = DeterministicRng(seed)
    out = []
    for severity in range(1, 6):
        sub = master.next_u64()
        out.append(apply_corruption(image, CorruptionSpec(kind, severity, sub), table))
    return out
