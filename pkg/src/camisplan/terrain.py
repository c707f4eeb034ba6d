"""Elevation rasters, hexagonal resampling and per-node slope fields."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import ndimage

SQRT3_2 = math.sqrt(3.0) / 2.0

# Axial neighbour offsets in their fixed order.
NEIGHBOR_OFFSETS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))

ARTIFACT_MAGIC = "# camisplan-hexterrain v1"
_ASCII_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


class TerrainError(Exception):
    """Invalid elevation data."""


class FormatError(TerrainError):
    """Input file does not parse under its declared format."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class BoundsError(TerrainError):
    """Requested hex extent is not covered by the raster."""


@dataclass
class ElevationGrid:
    """Square-cell raster; ``values[0]`` is the northernmost (top) row."""

    n_cols: int
    n_rows: int
    cell_size: float
    origin_x: float
    origin_y: float
    values: np.ndarray
    nodata: float = -9999.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.n_cols < 2 or self.n_rows < 2:
            raise TerrainError(f"grid must be at least 2x2, got {self.n_cols}x{self.n_rows}")
        if not self.cell_size > 0:
            raise TerrainError(f"cell size must be positive, got {self.cell_size}")
        expected = self.n_cols * self.n_rows
        if self.values.size != expected:
            raise TerrainError(f"expected {expected} values, got {self.values.size}")
        self.values = self.values.reshape(self.n_rows, self.n_cols)
        data = self.values[~self.nodata_mask]
        if not np.all(np.isfinite(data)):
            raise TerrainError("non-finite elevation value")

    @property
    def nodata_mask(self):
        return self.values == self.nodata

    def cell_center(self, row, col):
        x = self.origin_x + (col + 0.5) * self.cell_size
        y = self.origin_y + (self.n_rows - row - 0.5) * self.cell_size
        return x, y

    @property
    def center_extent(self):
        """(xmin, ymin, xmax, ymax) of the cell centres."""
        cs = self.cell_size
        return (self.origin_x + 0.5 * cs, self.origin_y + 0.5 * cs,
                self.origin_x + (self.n_cols - 0.5) * cs,
                self.origin_y + (self.n_rows - 0.5) * cs)

    def bilinear(self, x, y):
        """Bilinear elevation at world points; NaN where a corner is nodata
        or the point falls outside the centre extent."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        cs = self.cell_size
        fc = (x - (self.origin_x + 0.5 * cs)) / cs
        fr = (y - (self.origin_y + 0.5 * cs)) / cs  # rows counted from the bottom
        eps = 1e-9
        inside = (fc >= -eps) & (fc <= self.n_cols - 1 + eps) & (fr >= -eps) & (fr <= self.n_rows - 1 + eps)
        fc = np.clip(fc, 0.0, self.n_cols - 1)
        fr = np.clip(fr, 0.0, self.n_rows - 1)
        c0 = np.minimum(np.floor(fc).astype(int), self.n_cols - 2)
        r0 = np.minimum(np.floor(fr).astype(int), self.n_rows - 2)
        u = fc - c0
        v = fr - r0
        bottom_up = self.values[::-1]
        mask = self.nodata_mask[::-1]
        z00 = bottom_up[r0, c0]
        z10 = bottom_up[r0, c0 + 1]
        z01 = bottom_up[r0 + 1, c0]
        z11 = bottom_up[r0 + 1, c0 + 1]
        bad = mask[r0, c0] | mask[r0, c0 + 1] | mask[r0 + 1, c0] | mask[r0 + 1, c0 + 1]
        z = (1 - u) * (1 - v) * z00 + u * (1 - v) * z10 + (1 - u) * v * z01 + u * v * z11
        # exact sample reproduction on the lattice itself
        on_node = (u == 0) & (v == 0)
        z = np.where(on_node, z00, z)
        return np.where(inside & ~bad, z, np.nan)


def _parse_float(token, lineno, path):
    try:
        return float(token)
    except ValueError:
        raise FormatError(f"cannot parse number {token!r}", lineno, path) from None


def _read_ascii_grid(path):
    lines = Path(path).read_text().splitlines()
    header = {}
    lineno = 0
    while lineno < len(lines):
        parts = lines[lineno].split()
        if not parts:
            lineno += 1
            continue
        key = parts[0].lower()
        if key not in _ASCII_KEYS:
            break
        if len(parts) != 2:
            raise FormatError(f"malformed header line {lines[lineno]!r}", lineno + 1, path)
        header[key] = parts[1]
        lineno += 1
    for required in ("ncols", "nrows", "cellsize"):
        if required not in header:
            raise FormatError(f"missing header key {required!r}", lineno + 1, path)
    try:
        ncols = int(header["ncols"])
        nrows = int(header["nrows"])
    except ValueError:
        raise FormatError("ncols/nrows must be integers", None, path) from None
    cellsize = _parse_float(header["cellsize"], None, path)
    xll = _parse_float(header.get("xllcorner", "0"), None, path)
    yll = _parse_float(header.get("yllcorner", "0"), None, path)
    nodata = _parse_float(header.get("nodata_value", "-9999"), None, path)

    values = []
    for k in range(lineno, len(lines)):
        for tok in lines[k].split():
            v = _parse_float(tok, k + 1, path)
            if not math.isfinite(v):
                raise TerrainError(f"{path}:{k + 1}: non-finite elevation {tok!r}")
            values.append(v)
    if len(values) != ncols * nrows:
        raise FormatError(f"expected {ncols * nrows} values, got {len(values)}", None, path)
    return ElevationGrid(ncols, nrows, cellsize, xll, yll, np.array(values), nodata)


def _read_csv_grid(path, nodata=-9999.0):
    xs, ys, zs = [], [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if lineno == 1 and parts and parts[0].lower() == "x":
            continue
        if len(parts) != 3:
            raise FormatError(f"expected 3 columns x,y,z, got {len(parts)}", lineno, path)
        x, y, z = (_parse_float(p, lineno, path) for p in parts)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise FormatError("non-finite coordinate", lineno, path)
        if not math.isfinite(z):
            raise TerrainError(f"{path}:{lineno}: non-finite elevation")
        xs.append(x)
        ys.append(y)
        zs.append(z)
    if not xs:
        raise FormatError("no data rows", None, path)
    xs, ys, zs = np.array(xs), np.array(ys), np.array(zs)
    ux = np.unique(xs)
    uy = np.unique(ys)
    if ux.size < 2 or uy.size < 2:
        raise FormatError("lattice needs at least 2 distinct x and y", None, path)
    dx = np.diff(ux)
    dy = np.diff(uy)
    cs = dx[0]
    tol = 1e-9 * max(1.0, abs(cs))
    if np.any(np.abs(dx - cs) > tol) or np.any(np.abs(dy - cs) > tol):
        raise FormatError("points do not form a regular square lattice", None, path)
    if xs.size != ux.size * uy.size:
        raise FormatError(f"incomplete lattice: expected {ux.size * uy.size} points, got {xs.size}", None, path)
    col = np.rint((xs - ux[0]) / cs).astype(int)
    row_from_bottom = np.rint((ys - uy[0]) / cs).astype(int)
    grid = np.full((uy.size, ux.size), np.nan)
    grid[uy.size - 1 - row_from_bottom, col] = zs
    if np.isnan(grid).any():
        raise FormatError("duplicate lattice points", None, path)
    return ElevationGrid(ux.size, uy.size, float(cs), float(ux[0] - cs / 2), float(uy[0] - cs / 2),
                         grid, nodata)


def load_elevation(path, format=None):
    """Read an ESRI ASCII grid (``ascii-grid``) or an ``x,y,z`` CSV lattice."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "ascii-grid"
    if format == "ascii-grid":
        return _read_ascii_grid(path)
    if format == "csv":
        return _read_csv_grid(path)
    raise ValueError(f"unknown elevation format {format!r}")


def write_ascii_grid(grid, path):
    """Write ``grid`` so that ``load_elevation`` returns identical values."""
    lines = [
        f"ncols {grid.n_cols}",
        f"nrows {grid.n_rows}",
        f"xllcorner {float(grid.origin_x)!r}",
        f"yllcorner {float(grid.origin_y)!r}",
        f"cellsize {float(grid.cell_size)!r}",
        f"NODATA_value {float(grid.nodata)!r}",
    ]
    for row in grid.values:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def smooth(grid, window_radius):
    """Mean filter over a (2r+1)^2 window, ignoring nodata cells.

    Windows are truncated at the raster border. Cells whose window holds no
    data stay nodata.
    """
    r = int(window_radius)
    if r < 0:
        raise ValueError("window_radius must be >= 0")
    if r == 0:
        return replace(grid, values=grid.values.copy())
    mask = ~grid.nodata_mask
    vals = np.where(mask, grid.values, 0.0)
    size = 2 * r + 1
    # box sums via summed-area table; exact counts for truncated windows
    def box_sum(a):
        sat = np.zeros((a.shape[0] + 1, a.shape[1] + 1))
        sat[1:, 1:] = a.cumsum(0).cumsum(1)
        nr, nc = a.shape
        rows = np.arange(nr)
        cols = np.arange(nc)
        r0 = np.clip(rows - r, 0, nr)[:, None]
        r1 = np.clip(rows + r + 1, 0, nr)[:, None]
        c0 = np.clip(cols - r, 0, nc)[None, :]
        c1 = np.clip(cols + r + 1, 0, nc)[None, :]
        return sat[r1, c1] - sat[r0, c1] - sat[r1, c0] + sat[r0, c0]

    if size > 64:
        sums = box_sum(vals)
    else:
        # direct accumulation keeps rounding local for the common small windows
        sums = ndimage.correlate(vals, np.ones((size, size)), mode="constant", cval=0.0)
    counts = np.rint(box_sum(mask.astype(float)))
    out = np.where(counts > 0, sums / np.maximum(counts, 1), grid.nodata)
    return replace(grid, values=out)


class HexIndex(NamedTuple):
    i: int
    j: int


def hex_position(idx, h):
    """Planar position of axial node ``idx`` relative to the lattice origin."""
    if not h > 0:
        raise ValueError("h must be positive")
    i, j = idx
    return np.array([h * i + 0.5 * h * j, h * SQRT3_2 * j])


def neighborhood(idx):
    i, j = idx
    return [HexIndex(i + di, j + dj) for di, dj in NEIGHBOR_OFFSETS]


@dataclass
class HexTerrain:
    """Hexagonal node lattice covering a parallelogram of axial indices.

    Array slot ``[a, b]`` holds node ``(i0 + a, j0 + b)``. Nodes outside the
    source raster, over nodata, or without a usable slope stencil are
    flagged invalid.
    """

    h: float
    origin: tuple
    i0: int
    j0: int
    elevation: np.ndarray
    valid: np.ndarray
    alpha: np.ndarray = None
    gamma: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.elevation = np.asarray(self.elevation, dtype=float)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.alpha is None:
            self.alpha = np.full(self.shape, np.nan)
        if self.gamma is None:
            self.gamma = np.full(self.shape + (2,), np.nan)

    @property
    def shape(self):
        return self.elevation.shape

    @property
    def bounds(self):
        ni, nj = self.shape
        return (self.i0, self.i0 + ni - 1), (self.j0, self.j0 + nj - 1)

    @property
    def isotropic(self):
        return self.valid & (self.alpha == 0.0)

    def slot(self, idx):
        return idx[0] - self.i0, idx[1] - self.j0

    def in_bounds(self, idx):
        a, b = self.slot(idx)
        ni, nj = self.shape
        return 0 <= a < ni and 0 <= b < nj

    def is_valid(self, idx):
        return self.in_bounds(idx) and bool(self.valid[self.slot(idx)])

    def index_grids(self):
        ni, nj = self.shape
        ii, jj = np.meshgrid(np.arange(ni) + self.i0, np.arange(nj) + self.j0, indexing="ij")
        return ii, jj

    def relative_positions(self):
        """(px, py) arrays of node positions relative to the origin."""
        ii, jj = self.index_grids()
        return self.h * ii + 0.5 * self.h * jj, self.h * SQRT3_2 * jj

    def world_position(self, idx):
        p = hex_position(idx, self.h)
        return np.array([p[0] + self.origin[0], p[1] + self.origin[1]])

    def nearest_node(self, x, y):
        """Closest axial index to a world point (may be out of bounds)."""
        rx = x - self.origin[0]
        ry = y - self.origin[1]
        jf = ry / (self.h * SQRT3_2)
        iff = rx / self.h - 0.5 * jf
        best = None
        for i in (math.floor(iff), math.floor(iff) + 1):
            for j in (math.floor(jf), math.floor(jf) + 1):
                p = hex_position((i, j), self.h)
                d = (p[0] - rx) ** 2 + (p[1] - ry) ** 2
                if best is None or d < best[0] - 1e-15:
                    best = (d, HexIndex(i, j))
        return best[1]

    def triangle(self, x, y):
        """Vertices and barycentric weights of the lattice triangle holding
        world point (x, y)."""
        rx = x - self.origin[0]
        ry = y - self.origin[1]
        jf = ry / (self.h * SQRT3_2)
        iff = rx / self.h - 0.5 * jf
        i = math.floor(iff)
        j = math.floor(jf)
        u = iff - i
        v = jf - j
        if u + v <= 1.0:
            verts = (HexIndex(i, j), HexIndex(i + 1, j), HexIndex(i, j + 1))
            weights = (1.0 - u - v, u, v)
        else:
            verts = (HexIndex(i + 1, j + 1), HexIndex(i, j + 1), HexIndex(i + 1, j))
            weights = (u + v - 1.0, 1.0 - u, 1.0 - v)
        return verts, weights

    def interpolate(self, values, x, y, tol=1e-9):
        """Barycentric interpolation of a per-node field (last axes kept).

        Returns None when a vertex with non-negligible weight is invalid.
        """
        verts, weights = self.triangle(x, y)
        acc = 0.0
        wsum = 0.0
        for v, w in zip(verts, weights):
            if w <= tol:
                continue
            if not self.is_valid(v):
                return None
            acc = acc + w * values[self.slot(v)]
            wsum += w
        if wsum == 0.0:
            return None
        return acc / wsum


def resample_to_hex(grid, h, extent=None):
    """Bilinearly sample ``grid`` onto a hex lattice of spacing ``h``.

    ``extent`` is (xmin, ymin, xmax, ymax) in world metres and defaults to
    the raster's cell-centre extent; the lattice origin is (xmin, ymin).
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if h < grid.cell_size:
        raise ValueError(f"hex resolution {h} is finer than the raster cell size {grid.cell_size}")
    cext = grid.center_extent
    if extent is None:
        extent = cext
    xmin, ymin, xmax, ymax = extent
    tol = 1e-9 * max(1.0, abs(grid.cell_size))
    if (xmin < cext[0] - tol or ymin < cext[1] - tol or xmax > cext[2] + tol or ymax > cext[3] + tol):
        raise BoundsError(f"hex extent {tuple(extent)} exceeds raster extent {cext}")
    width = xmax - xmin
    height = ymax - ymin
    nj = int(math.floor(height / (h * SQRT3_2) + 1e-9)) + 1
    i0 = -((nj - 1) // 2)
    i1 = int(math.floor(width / h + 1e-9))
    ni = i1 - i0 + 1
    terrain = HexTerrain(h=float(h), origin=(float(xmin), float(ymin)), i0=i0, j0=0,
                         elevation=np.full((ni, nj), np.nan), valid=np.zeros((ni, nj), bool))
    px, py = terrain.relative_positions()
    inside = (px >= -tol) & (px <= width + tol) & (py >= -tol) & (py <= height + tol)
    z = grid.bilinear(px + xmin, py + ymin)
    valid = inside & np.isfinite(z)
    terrain.elevation = np.where(valid, z, np.nan)
    terrain.valid = valid
    return terrain


def slope_fields(terrain, flat_tol=1e-12):
    """Fill steepness and downhill aspect from a least-squares plane over
    each node and its valid neighbours."""
    h = terrain.h
    ni, nj = terrain.shape
    z = terrain.elevation
    valid = terrain.valid
    # accumulate normal equations of z = c0 + c1*dx + c2*dy per node
    S = np.zeros((ni, nj, 3, 3))
    rhs = np.zeros((ni, nj, 3))
    for di, dj in ((0, 0),) + NEIGHBOR_OFFSETS:
        dx = h * di + 0.5 * h * dj
        dy = h * SQRT3_2 * dj
        a_lo, a_hi = max(0, -di), min(ni, ni - di)
        b_lo, b_hi = max(0, -dj), min(nj, nj - dj)
        src = (slice(a_lo + di, a_hi + di), slice(b_lo + dj, b_hi + dj))
        dst = (slice(a_lo, a_hi), slice(b_lo, b_hi))
        w = (valid[src] & valid[dst]).astype(float)
        zz = np.where(w > 0, z[src] - np.where(valid[dst], z[dst], 0.0), 0.0)
        row = np.array([1.0, dx, dy])
        S[dst] += w[..., None, None] * np.outer(row, row)
        rhs[dst] += (w * zz)[..., None] * row
    det = np.linalg.det(S)
    ok = valid & (np.abs(det) > 1e-9 * h ** 4)
    coef = np.zeros((ni, nj, 3))
    if ok.any():
        coef[ok] = np.linalg.solve(S[ok], rhs[ok][..., None])[..., 0]
    gx = coef[..., 1]
    gy = coef[..., 2]
    mag = np.hypot(gx, gy)
    flat = mag <= flat_tol
    alpha = np.where(flat, 0.0, np.arctan(mag))
    with np.errstate(invalid="ignore", divide="ignore"):
        gamma = np.stack([np.where(flat, 1.0, -gx / mag), np.where(flat, 0.0, -gy / mag)], axis=-1)
    alpha = np.where(ok, alpha, np.nan)
    gamma = np.where(ok[..., None], gamma, np.nan)
    return replace(terrain, alpha=alpha, gamma=gamma, valid=ok, meta=dict(terrain.meta))


def process_dem(grid, h, smooth_radius=0, extent=None):
    """Smooth, resample and compute slope fields in one go."""
    if smooth_radius:
        grid = smooth(grid, smooth_radius)
    return slope_fields(resample_to_hex(grid, h, extent))


def _fmt(v):
    v = float(v)
    return repr(v) if math.isfinite(v) else "nan"


def write_hex_artifact(terrain, path):
    """Text artifact with one row per lattice slot (full-precision floats)."""
    px, py = terrain.relative_positions()
    ii, jj = terrain.index_grids()
    ni, nj = terrain.shape
    ox, oy = terrain.origin
    lines = [
        ARTIFACT_MAGIC,
        f"# h={_fmt(terrain.h)} origin_x={_fmt(ox)} origin_y={_fmt(oy)} "
        f"i0={terrain.i0} j0={terrain.j0} ni={ni} nj={nj}",
        "i,j,x,y,z,alpha_rad,gamma_x,gamma_y,valid",
    ]
    for a in range(ni):
        for b in range(nj):
            lines.append(",".join((
                str(ii[a, b]), str(jj[a, b]),
                _fmt(px[a, b] + ox), _fmt(py[a, b] + oy),
                _fmt(terrain.elevation[a, b]), _fmt(terrain.alpha[a, b]),
                _fmt(terrain.gamma[a, b, 0]), _fmt(terrain.gamma[a, b, 1]),
                "1" if terrain.valid[a, b] else "0",
            )))
    Path(path).write_text("\n".join(lines) + "\n")


def read_hex_artifact(path):
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != ARTIFACT_MAGIC:
        raise FormatError("not a hex terrain artifact (bad magic line)", 1, path)
    try:
        meta = dict(kv.split("=", 1) for kv in lines[1].lstrip("# ").split())
        h = float(meta["h"])
        origin = (float(meta["origin_x"]), float(meta["origin_y"]))
        i0, j0, ni, nj = (int(meta[k]) for k in ("i0", "j0", "ni", "nj"))
    except (KeyError, ValueError, IndexError):
        raise FormatError("malformed artifact header", 2, path) from None
    elev = np.full((ni, nj), np.nan)
    alpha = np.full((ni, nj), np.nan)
    gamma = np.full((ni, nj, 2), np.nan)
    valid = np.zeros((ni, nj), bool)
    rows = lines[3:]
    if len(rows) != ni * nj:
        raise FormatError(f"expected {ni * nj} rows, got {len(rows)}", None, path)
    for k, line in enumerate(rows, start=4):
        parts = line.split(",")
        if len(parts) != 9:
            raise FormatError("expected 9 columns", k, path)
        try:
            a = int(parts[0]) - i0
            b = int(parts[1]) - j0
            elev[a, b] = float(parts[4])
            alpha[a, b] = float(parts[5])
            gamma[a, b] = (float(parts[6]), float(parts[7]))
            valid[a, b] = parts[8].strip() == "1"
        except (ValueError, IndexError):
            raise FormatError("bad row", k, path) from None
    return HexTerrain(h=h, origin=origin, i0=i0, j0=j0, elevation=elev, valid=valid,
                      alpha=alpha, gamma=gamma)
