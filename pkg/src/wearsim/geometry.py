"""Parametric asperity-junction domains.

A junction is formed by two congruent triangular asperities (base D,
height H) whose inclined faces adhere over a fraction J of the side
length. Construction: start from the fully overlapping configuration
(J = 1, the two triangles share a complete side) and slide the upper
asperity along the common side direction by (1 - J)*j_max, so the
contact segment keeps length J*j_max and J -> 0 degenerates to
tip-on-tip contact. The asperities sit between two rectangular bulk
blocks; the bulk nearest the junction (height S) is meshed fine and may
be damaged (region 2), the remainder is coarse and undamageable
(region 1), the asperities themselves are region 3.

All constructions are exact polygon arithmetic; landmark points (the
re-entrant "junction" corners at the contact ends and the "bulk"
corners where each asperity meets its substrate) are computed
geometrically so they exist before any solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

__all__ = [
    "JunctionParams",
    "TaggedPolygon",
    "Landmarks",
    "JunctionGeometry",
    "build_single_junction",
    "build_double_junction",
    "landmark_points",
    "rectangle_strip",
    "to_poly_text",
]

BULK_COARSE = 1
BULK_FINE = 2
JUNCTION = 3

_MERGE_TOL = 1.0e-12


@dataclass(frozen=True)
class JunctionParams:
    """Geometric parameters of a (pair of) asperity junction(s).

    ``delta_gap`` is the horizontal clearance between the two asperity
    bases of a double junction; leave it ``None`` for single junctions.
    ``fine_length_over_D`` limits the horizontal extent of the fine
    bulk strips (region 2); ``None`` means the full bulk length.
    """

    D: float = 1.0
    H_over_D: float = 0.5
    J: float = 0.5
    B_over_D: float = 3.0
    L_over_D: float = 5.0
    S_over_D: float = 1.0
    delta_gap: Optional[float] = None
    fine_length_over_D: Optional[float] = None

    @property
    def H(self) -> float:
        return self.H_over_D * self.D

    @property
    def j_max(self) -> float:
        """Full asperity side length sqrt((D/2)^2 + H^2)."""
        return float(np.hypot(0.5 * self.D, self.H))

    def validate(self, double: bool) -> None:
        if self.D <= 0.0:
            raise ValueError(f"D must be positive, got {self.D}")
        if not 0.0 < self.J <= 1.0:
            raise ValueError(f"J must lie in (0, 1], got {self.J}")
        if self.H_over_D <= 0.0:
            raise ValueError(f"H/D must be positive, got {self.H_over_D}")
        if self.B_over_D < 2.0:
            raise ValueError(f"B/D must be >= 2, got {self.B_over_D}")
        if self.L_over_D < 4.0:
            raise ValueError(f"L/D must be >= 4, got {self.L_over_D}")
        if not 0.0 < self.S_over_D < self.B_over_D:
            raise ValueError(
                f"S/D must lie in (0, B/D), got {self.S_over_D}")
        if double:
            if self.delta_gap is None:
                raise ValueError("double junction requires delta_gap")
            if self.delta_gap < 0.0:
                raise ValueError(
                    f"delta_gap must be >= 0, got {self.delta_gap}")
            footprint = 2.0 * self.D + self.delta_gap
            if footprint >= self.L_over_D * self.D:
                raise ValueError(
                    f"asperity footprint {footprint} does not fit in "
                    f"L = {self.L_over_D * self.D}")
        elif self.delta_gap is not None:
            raise ValueError("single junction must not set delta_gap")
        if self.fine_length_over_D is not None:
            if self.fine_length_over_D > self.L_over_D:
                raise ValueError("fine_length cannot exceed L")


@dataclass(frozen=True)
class TaggedPolygon:
    tag: int
    vertices: np.ndarray  # (n, 2), CCW, may contain collinear split points

    @property
    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True)
class Landmarks:
    """Stress-concentration landmark coordinates used by the classifier."""

    junction_corners: np.ndarray     # (k, 2): re-entrant contact-end corners
    bulk_corners: np.ndarray         # (k, 2): asperity-substrate corners
    interface_segments: np.ndarray   # (m, 2, 2): adhesive contact segments
    junction_centers: np.ndarray     # (m, 2): contact segment midpoints


@dataclass(frozen=True)
class JunctionGeometry:
    params: JunctionParams
    double: bool
    regions: list[TaggedPolygon]
    landmarks: Landmarks
    y_top: float                     # upper substrate surface height
    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    base_intervals_bottom: np.ndarray  # (m, 2): bottom asperity base x-spans
    base_intervals_top: np.ndarray     # (m, 2): top asperity base x-spans

    @property
    def substrate_ys(self) -> tuple[float, float]:
        return 0.0, self.y_top

    def region_area(self, tag: int) -> float:
        return sum(p.area for p in self.regions if p.tag == tag)

    @property
    def total_area(self) -> float:
        return sum(p.area for p in self.regions)


def _dedupe_ring(vertices, tol):
    out = []
    for v in vertices:
        if not out or np.hypot(v[0] - out[-1][0], v[1] - out[-1][1]) > tol:
            out.append((float(v[0]), float(v[1])))
    if len(out) > 1 and np.hypot(out[0][0] - out[-1][0],
                                 out[0][1] - out[-1][1]) <= tol:
        out.pop()
    return np.array(out)


def _asperity_pair(p: JunctionParams, x0: float):
    """Polygons and landmarks of one junction with bottom base at [x0, x0+D]."""
    D, H, J = p.D, p.H, p.J
    p_high = np.array([x0 + 0.5 * D, H])                      # lower apex
    p_low = np.array([x0 + 0.5 * (1.0 + J) * D, (1.0 - J) * H])  # upper apex
    y_top = (2.0 - J) * H
    base_l = np.array([x0 + 0.5 * J * D, y_top])              # upper base-left
    base_r = np.array([x0 + 0.5 * (2.0 + J) * D, y_top])
    tol = _MERGE_TOL * max(D, H)

    lower = _dedupe_ring(
        [(x0, 0.0), (x0 + D, 0.0), p_low, p_high], tol)
    upper = _dedupe_ring([p_low, base_r, base_l, p_high], tol)
    if len(lower) < 3 or len(upper) < 3:
        raise ValueError("degenerate asperity polygon")

    landmarks = dict(
        junction_corners=np.array([p_high, p_low]),
        bulk_corners=np.array([[x0 + D, 0.0], base_l]),
        interface=np.array([p_low, p_high]),
        center=0.5 * (p_low + p_high),
        base_bottom=(x0, x0 + D),
        base_top=(float(base_l[0]), float(base_r[0])),
    )
    return [TaggedPolygon(JUNCTION, lower), TaggedPolygon(JUNCTION, upper)], landmarks


def _bulk_polygons(p, cx, y_top, split_bottom, split_top):
    """Region 1/2 rectangles with split points inserted on shared lines."""
    D = p.D
    B, L, S = p.B_over_D * D, p.L_over_D * D, p.S_over_D * D
    F = L if p.fine_length_over_D is None else p.fine_length_over_D * D
    xL, xR = cx - 0.5 * L, cx + 0.5 * L
    xl, xr = cx - 0.5 * F, cx + 0.5 * F
    margin = 0.25 * D
    if xl > min(split_bottom + split_top) - margin or \
       xr < max(split_bottom + split_top) + margin:
        raise ValueError(
            "fine_length too small: fine strips must cover the asperity "
            "bases with margin")

    def along(y, xs, lo, hi, reverse):
        pts = [(lo, y)] + [(x, y) for x in sorted(xs) if lo < x < hi] + [(hi, y)]
        return pts[::-1] if reverse else pts

    polys = []
    # fine strips (region 2), split where the asperity bases meet them
    polys.append(TaggedPolygon(BULK_FINE, np.array(
        [(xl, -S), (xr, -S)] + along(0.0, split_bottom, xl, xr, reverse=True))))
    polys.append(TaggedPolygon(BULK_FINE, np.array(
        along(y_top, split_top, xl, xr, reverse=False)
        + [(xr, y_top + S), (xl, y_top + S)])))
    # coarse slabs (region 1), split where the fine strips meet them
    polys.append(TaggedPolygon(BULK_COARSE, np.array(
        [(xL, -B), (xR, -B)] + along(-S, [xl, xr], xL, xR, reverse=True))))
    polys.append(TaggedPolygon(BULK_COARSE, np.array(
        along(y_top + S, [xl, xr], xL, xR, reverse=False)
        + [(xR, y_top + B), (xL, y_top + B)])))
    # side pieces when the fine strips do not span the full length
    if xl - xL > _MERGE_TOL * D:
        polys.append(TaggedPolygon(BULK_COARSE, np.array(
            [(xL, -S), (xl, -S), (xl, 0.0), (xL, 0.0)])))
        polys.append(TaggedPolygon(BULK_COARSE, np.array(
            [(xL, y_top), (xl, y_top), (xl, y_top + S), (xL, y_top + S)])))
        polys.append(TaggedPolygon(BULK_COARSE, np.array(
            [(xr, -S), (xR, -S), (xR, 0.0), (xr, 0.0)])))
        polys.append(TaggedPolygon(BULK_COARSE, np.array(
            [(xr, y_top), (xR, y_top), (xR, y_top + S), (xr, y_top + S)])))
    bounds = (xL, -B, xR, y_top + B)
    return polys, bounds


def _build(params: JunctionParams, double: bool) -> JunctionGeometry:
    params.validate(double=double)
    D, H = params.D, params.H
    if params.J < 1.0 and H >= (2.0 - params.J) * H + _MERGE_TOL:
        raise ValueError("asperity apex pierces the opposite substrate")

    offsets = [0.0]
    if double:
        offsets.append(D + params.delta_gap)

    polys: list[TaggedPolygon] = []
    jc, bc, segs, centers = [], [], [], []
    bases_b, bases_t = [], []
    split_bottom, split_top = [], []
    for x0 in offsets:
        pair, lm = _asperity_pair(params, x0)
        polys.extend(pair)
        jc.extend(lm["junction_corners"])
        bc.extend(lm["bulk_corners"])
        segs.append(lm["interface"])
        centers.append(lm["center"])
        bases_b.append(lm["base_bottom"])
        bases_t.append(lm["base_top"])
        split_bottom.extend(lm["base_bottom"])
        split_top.extend(lm["base_top"])

    y_top = (2.0 - params.J) * H
    cx = float(np.mean(np.asarray(centers)[:, 0]))
    bulk, bounds = _bulk_polygons(params, cx, y_top, split_bottom, split_top)
    polys.extend(bulk)

    landmarks = Landmarks(
        junction_corners=np.array(jc),
        bulk_corners=np.array(bc),
        interface_segments=np.array(segs),
        junction_centers=np.array(centers),
    )
    return JunctionGeometry(
        params=params,
        double=double,
        regions=polys,
        landmarks=landmarks,
        y_top=y_top,
        bounds=bounds,
        base_intervals_bottom=np.array(bases_b),
        base_intervals_top=np.array(bases_t),
    )


def build_single_junction(params: JunctionParams) -> JunctionGeometry:
    """Tagged polygonal domain of one adhesive junction under its bulks."""
    return _build(params, double=False)


def build_double_junction(params: JunctionParams) -> JunctionGeometry:
    """Two congruent junctions separated horizontally by ``delta_gap``."""
    return _build(params, double=True)


def landmark_points(geom: JunctionGeometry) -> Landmarks:
    """Accessor for the stress-concentration landmarks."""
    return geom.landmarks


def rectangle_strip(width: float, height: float, tag: int = BULK_FINE,
                    center: tuple[float, float] = (0.0, 0.0)) -> JunctionGeometry:
    """A plain rectangular specimen (calibration strips, patch tests).

    Returned as a degenerate JunctionGeometry with a single tagged region
    and no landmarks, so the meshing and solver paths apply unchanged.
    """
    if width <= 0 or height <= 0:
        raise ValueError("width and height must be positive")
    cx, cy = center
    x0, x1 = cx - 0.5 * width, cx + 0.5 * width
    y0, y1 = cy - 0.5 * height, cy + 0.5 * height
    poly = TaggedPolygon(tag, np.array([(x0, y0), (x1, y0), (x1, y1), (x0, y1)]))
    empty = np.zeros((0, 2))
    params = JunctionParams(D=width, H_over_D=height / width)
    return JunctionGeometry(
        params=params,
        double=False,
        regions=[poly],
        landmarks=Landmarks(empty, empty, np.zeros((0, 2, 2)), empty),
        y_top=y1,
        bounds=(x0, y0, x1, y1),
        base_intervals_bottom=np.zeros((0, 2)),
        base_intervals_top=np.zeros((0, 2)),
    )


def _collect_pslg(geom: JunctionGeometry, tol: float):
    """Deduplicated vertex/segment lists of all region polygon edges."""
    points: list[tuple[float, float]] = []
    index: dict[tuple[int, int], int] = {}
    scale = max(geom.bounds[2] - geom.bounds[0], geom.bounds[3] - geom.bounds[1])
    q = tol * scale

    def pid(pt):
        key = (int(round(pt[0] / q)), int(round(pt[1] / q)))
        if key not in index:
            index[key] = len(points)
            points.append((float(pt[0]), float(pt[1])))
        return index[key]

    seg_set = {}
    for poly in geom.regions:
        n = len(poly.vertices)
        for i in range(n):
            a = pid(poly.vertices[i])
            b = pid(poly.vertices[(i + 1) % n])
            if a == b:
                continue
            seg_set[(min(a, b), max(a, b))] = poly.tag
    segments = np.array(sorted(seg_set), dtype=np.int64)
    return np.array(points), segments


def to_poly_text(geom: JunctionGeometry) -> str:
    """Plain-text polygon description (vertices, segments, region seeds).

    One vertex per line (id x y), one segment per line (id v1 v2), one
    region seed per line (id x y tag); consumable by external meshers.
    """
    try:
        from shapely.geometry import Polygon
    except ImportError:  # pragma: no cover
        Polygon = None
    points, segments = _collect_pslg(geom, 1.0e-12)
    lines = [f"{len(points)} 2 0 0"]
    for i, (x, y) in enumerate(points):
        lines.append(f"{i} {x:.17g} {y:.17g}")
    lines.append(f"{len(segments)} 0")
    for i, (a, b) in enumerate(segments):
        lines.append(f"{i} {a} {b}")
    lines.append("0")
    lines.append(f"{len(geom.regions)}")
    for i, poly in enumerate(geom.regions):
        if Polygon is not None:
            rp = Polygon(poly.vertices).representative_point()
            sx, sy = rp.x, rp.y
        else:  # pragma: no cover
            sx, sy = poly.vertices.mean(axis=0)
        lines.append(f"{i} {sx:.17g} {sy:.17g} {poly.tag}")
    return "\n".join(lines) + "\n"
