"""Stress invariants, damage-region extraction and failure classification.

Failure taxonomy: slip along the adhesive interface, one or two straight
shear bands through the junction, small-particle formation (crack pair
nucleating at the contact-end corners), large-particle formation (crack
nucleating at the asperity-substrate corners) and, for junction pairs,
macro-particle formation (one crack system spanning both asperities).
Classification is geometric: it matches damage-region descriptors
against the landmark points of the geometry, with all tolerances
exposed (and reported) so stored snapshots can be re-classified.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import _kernels as kern
from .constitutive import MaterialParams, SplitKind
from .fem import FemSystem
from .geometry import JunctionGeometry, Landmarks
from .meshing import Mesh

__all__ = [
    "StressInvariants", "DamageRegion", "FailureMode", "ClassifierConfig",
    "FailureReport", "stress_invariants", "element_stresses",
    "invariant_fields", "threshold_fields", "extract_damage_regions",
    "classify_failure",
]


class FailureMode(enum.Enum):
    NO_FAILURE = "no_failure"
    SLIP = "slip"
    SINGLE_SHEAR_BAND = "single_shear_band"
    DOUBLE_SHEAR_BAND = "double_shear_band"
    SMALL_PARTICLE = "small_particle"
    LARGE_PARTICLE = "large_particle"
    MACRO_PARTICLE = "macro_particle"
    MIXED = "mixed"


@dataclass(frozen=True)
class StressInvariants:
    sigma_eq: float
    sigma_h: float
    sigma_m_plus: float


def stress_invariants(sigma: np.ndarray) -> StressInvariants:
    """Equivalent and hydrostatic invariants of a 2x2 stress tensor."""
    sigma = np.asarray(sigma, dtype=float)
    sh = 0.5 * (sigma[0, 0] + sigma[1, 1])
    dev = sigma - sh * np.eye(2)
    seq = float(np.sqrt(1.5 * np.tensordot(dev, dev)))
    return StressInvariants(sigma_eq=seq, sigma_h=float(sh),
                            sigma_m_plus=max(0.0, float(sh)))


def element_stresses(system: FemSystem, u, alpha) -> np.ndarray:
    """Degraded Cauchy stress per element in Voigt form (sxx, syy, sxy)."""
    eps = system.strains(u)
    signs = ((eps[:, 0] + eps[:, 1]) >= 0.0).astype(np.uint8)
    kv, kd = kern.split_moduli(system.gbar(alpha), signs,
                               system.split_code, system.mat.K,
                               system.mat.mu)
    tr = eps[:, 0] + eps[:, 1]
    d1 = eps[:, 0] - eps[:, 1]
    sxx = kv * tr + kd * d1
    syy = kv * tr - kd * d1
    sxy = kd * eps[:, 2]
    return np.column_stack([sxx, syy, sxy])


def invariant_fields(sig_voigt: np.ndarray):
    """(sigma_eq, sigma_h) arrays from Voigt stresses."""
    sh = 0.5 * (sig_voigt[:, 0] + sig_voigt[:, 1])
    d1 = 0.5 * (sig_voigt[:, 0] - sig_voigt[:, 1])
    # 2D deviator: diag(+d1, -d1) plus shear
    dev2 = 2.0 * d1 ** 2 + 2.0 * sig_voigt[:, 2] ** 2
    seq = np.sqrt(1.5 * dev2)
    return seq, sh


# visualization bands: damage >= 0.001; sigma_eq in [0.5, 5];
# sigma_h in [0.5, 4] (tension) and [-5, -0.5] (compression)
DISPLAY_ALPHA_MIN = 0.001
DISPLAY_EQ_RANGE = (0.5, 5.0)
DISPLAY_H_TENSION = (0.5, 4.0)
DISPLAY_H_COMPRESSION = (-5.0, -0.5)


def threshold_fields(system: FemSystem, u, alpha) -> dict:
    """Masked display fields mirroring the standard visualization bands."""
    sig = element_stresses(system, u, alpha)
    seq, sh = invariant_fields(sig)
    abar = system.alpha_bar(alpha)
    out = {
        "sigma": sig,
        "sigma_eq": seq,
        "sigma_h": sh,
        "alpha_bar": abar,
        "mask_damage": abar >= DISPLAY_ALPHA_MIN,
        "mask_eq": (seq >= DISPLAY_EQ_RANGE[0]) & (seq <= DISPLAY_EQ_RANGE[1]),
        "mask_h_tension": (sh >= DISPLAY_H_TENSION[0])
                          & (sh <= DISPLAY_H_TENSION[1]),
        "mask_h_compression": (sh >= DISPLAY_H_COMPRESSION[0])
                              & (sh <= DISPLAY_H_COMPRESSION[1]),
        "sigma_eq_clipped": np.clip(seq, *DISPLAY_EQ_RANGE),
        "sigma_h_clipped": np.clip(sh, DISPLAY_H_COMPRESSION[0],
                                   DISPLAY_H_TENSION[1]),
    }
    return out


@dataclass
class DamageRegion:
    elements: np.ndarray
    element_centroids: np.ndarray  # (k, 2)
    weight: float                 # alpha-weighted area
    centroid: np.ndarray
    orientation_deg: float        # principal axis angle in (-90, 90]
    axis: np.ndarray
    endpoints: np.ndarray         # (2, 2)
    length: float
    thickness: float
    nucleation_point: np.ndarray
    nucleation_step: int
    nucleation_sites: np.ndarray   # (s, 2) centroids of earliest-crossing
    x_extent: tuple[float, float]
    y_extent: tuple[float, float]

    def summary(self) -> dict:
        return {
            "n_elements": int(len(self.elements)),
            "weight": self.weight,
            "centroid": self.centroid.tolist(),
            "orientation_deg": self.orientation_deg,
            "length": self.length,
            "thickness": self.thickness,
            "nucleation_point": self.nucleation_point.tolist(),
            "nucleation_step": int(self.nucleation_step),
        }


def _element_adjacency(mesh: Mesh, sel: np.ndarray) -> sp.csr_matrix:
    """Edge-sharing adjacency among the selected elements."""
    idx = np.nonzero(sel)[0]
    tris = mesh.triangles[idx]
    edges = np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    owner = np.tile(np.arange(len(idx)), 3)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    edges, owner = edges[order], owner[order]
    same = np.all(edges[1:] == edges[:-1], axis=1)
    a, bzz = owner[:-1][same], owner[1:][same]
    n = len(idx)
    A = sp.coo_matrix((np.ones(len(a)), (a, bzz)), shape=(n, n))
    return (A + A.T).tocsr(), idx


def extract_damage_regions(alpha: np.ndarray, mesh: Mesh,
                           loc_threshold: float = 0.5,
                           first_cross: Optional[np.ndarray] = None,
                           first_cross_step: Optional[np.ndarray] = None,
                           site_window: int = 0,
                           ) -> list[DamageRegion]:
    """Connected localized-damage regions with PCA descriptors.

    ``first_cross`` orders damage appearance (any monotone clock; the
    driver supplies damage-half-step ticks). Nucleation sites are the
    region elements crossing within ``site_window`` of the region's
    earliest tick. ``first_cross_step`` optionally maps the reported
    nucleation to load steps.
    """
    abar = alpha[mesh.triangles].mean(axis=1)
    sel = abar >= loc_threshold
    if not np.any(sel):
        return []
    A, idx = _element_adjacency(mesh, sel)
    n_comp, labels = connected_components(A, directed=False)
    cent = mesh.nodes[mesh.triangles[idx]].mean(axis=1)
    w_all = abar[idx] * mesh.areas()[idx]
    regions = []
    for comp in range(n_comp):
        members = labels == comp
        els = idx[members]
        w = w_all[members]
        x = cent[members]
        W = float(np.sum(w))
        c = (w[:, None] * x).sum(axis=0) / W
        dx = x - c
        cov = (w[:, None, None] * dx[:, :, None] * dx[:, None, :]) \
            .sum(axis=0) / W
        evals, evecs = np.linalg.eigh(cov)
        axis = evecs[:, 1]  # major
        if axis[0] < 0.0:
            axis = -axis
        ang = float(np.degrees(np.arctan2(axis[1], axis[0])))
        if ang > 90.0:
            ang -= 180.0
        t = dx @ axis
        endpoints = np.vstack([c + t.min() * axis, c + t.max() * axis])
        thickness = float(np.sqrt(12.0 * max(evals[0], 0.0)))
        if first_cross is not None and np.any(first_cross[els] >= 0):
            valid = first_cross[els] >= 0
            sub = els[valid]
            tick0 = int(np.min(first_cross[sub]))
            k = sub[np.argmin(first_cross[sub])]
            sites = x[valid][first_cross[sub] <= tick0 + site_window]
            step = int(first_cross_step[k]) \
                if first_cross_step is not None else tick0
        else:
            k = els[np.argmax(abar[els])]
            step = -1
            sites = x
        nuc = mesh.nodes[mesh.triangles[k]].mean(axis=0)
        regions.append(DamageRegion(
            elements=els, element_centroids=x, weight=W, centroid=c,
            orientation_deg=ang, axis=axis, endpoints=endpoints,
            length=float(t.max() - t.min()), thickness=thickness,
            nucleation_point=nuc, nucleation_step=step,
            nucleation_sites=sites,
            x_extent=(float(x[:, 0].min()), float(x[:, 0].max())),
            y_extent=(float(x[:, 1].min()), float(x[:, 1].max())),
        ))
    regions.sort(key=lambda r: -r.weight)
    return regions


@dataclass(frozen=True)
class ClassifierConfig:
    loc_threshold: float = 0.5
    interface_dist_ell: float = 2.0   # tube half-width around interface
    interface_coverage: float = 0.7
    orientation_tol_deg: float = 20.0
    corner_radius_ell: float = 3.0
    interior_margin_ell: float = 2.0  # shear bands live off the substrates
    drive_radius_ell: float = 1.5     # pre-failure concentration sampling
    drive_ratio: float = 0.5          # corner eligible if >= ratio * max

    def as_dict(self) -> dict:
        from dataclasses import asdict
        return asdict(self)


@dataclass
class FailureReport:
    mode: FailureMode
    failure_step: Optional[int]
    split: str
    geometry: dict
    regions: list
    classifier: dict
    detail: str = ""


def _point_segment_distance(pts: np.ndarray, seg: np.ndarray) -> np.ndarray:
    a, b = seg[0], seg[1]
    ab = b - a
    L2 = float(ab @ ab)
    t = np.clip(((pts - a) @ ab) / L2, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(pts - proj, axis=1), t


def _interface_alignment(region: DamageRegion, seg: np.ndarray,
                         ell: float, cfg: ClassifierConfig):
    """(in-tube weight fraction, covered fraction of segment length)."""
    cent = region.element_centroids
    d, t = _point_segment_distance(cent, seg)
    tube = d <= cfg.interface_dist_ell * ell
    if not np.any(tube):
        return 0.0, 0.0
    frac = float(np.sum(tube)) / len(cent)
    seg_len = float(np.linalg.norm(seg[1] - seg[0]))
    pad = cfg.interface_dist_ell * ell / seg_len
    covered = float(np.clip(t[tube].max() - t[tube].min() + pad, 0.0, 1.0))
    return frac, covered


def corner_drive(system: FemSystem, u_pre: np.ndarray, landmarks: Landmarks,
                 radius: float) -> dict:
    """Pre-failure driving-energy peak near each landmark corner.

    This is the quantitative version of reading the stress
    concentrations at the last undamaged step: the corners that
    actually nucleate are those whose degradable energy density peaks.
    """
    w0 = system.driving_energy(u_pre)
    cent = system.mesh.nodes[system.mesh.triangles].mean(axis=1)
    out = {}
    for name, corners in (("junction", landmarks.junction_corners),
                          ("bulk", landmarks.bulk_corners)):
        vals = np.zeros(len(corners))
        for i, c in enumerate(corners):
            near = np.linalg.norm(cent - c, axis=1) <= radius
            if np.any(near):
                vals[i] = float(np.max(w0[near]))
        out[name] = vals
    return out


def classify_failure(regions: list[DamageRegion], landmarks: Landmarks,
                     geom: JunctionGeometry, ell: float,
                     cfg: Optional[ClassifierConfig] = None,
                     drive: Optional[dict] = None,
                     ) -> tuple[FailureMode, str]:
    """Ordered decision rules; (mode, human-readable justification)."""
    cfg = cfg or ClassifierConfig()
    if not regions:
        return FailureMode.NO_FAILURE, "no localized damage regions"
    r_corner = cfg.corner_radius_ell * ell
    horiz = [r for r in regions
             if abs(r.orientation_deg) <= cfg.orientation_tol_deg]

    # slip: one region pinned to the adhesive interface over most of it
    if len(regions) == 1:
        for seg in landmarks.interface_segments:
            frac, cov = _interface_alignment(regions[0], seg, ell, cfg)
            if frac >= 0.5 and cov >= cfg.interface_coverage:
                return FailureMode.SLIP, (
                    f"single region along interface (tube fraction "
                    f"{frac:.2f}, coverage {cov:.2f})")

    # shear bands: horizontal, away from both substrate surfaces
    y0, y1 = geom.substrate_ys
    margin = cfg.interior_margin_ell * ell

    def interior(r):
        return (r.centroid[1] > y0 + margin) and (r.centroid[1] < y1 - margin)

    if len(regions) == 1 and len(horiz) == 1 and interior(regions[0]):
        return FailureMode.SINGLE_SHEAR_BAND, (
            f"one horizontal band (orientation "
            f"{regions[0].orientation_deg:.1f} deg)")
    if len(regions) == 2 and len(horiz) == 2 and all(map(interior, regions)):
        dang = abs(regions[0].orientation_deg - regions[1].orientation_deg)
        if min(dang, 180.0 - dang) <= cfg.orientation_tol_deg:
            return FailureMode.DOUBLE_SHEAR_BAND, (
                "two parallel horizontal bands")

    # corner matching uses the earliest-crossing element centroids of
    # each region (brutal one-step events mark the whole incipient crack
    # as nucleation, which correctly credits merged symmetric pairs).
    # When the pre-failure drive is available, a corner only counts if
    # its stress concentration was competitive (the crack path may sweep
    # past non-nucleating corners within one brutal step).
    if drive is not None:
        all_drives = np.concatenate([drive["junction"], drive["bulk"]])
        gate = cfg.drive_ratio * float(np.max(all_drives)) \
            if len(all_drives) else 0.0
        elig_j = drive["junction"] >= gate
        elig_b = drive["bulk"] >= gate
    else:
        elig_j = np.ones(len(landmarks.junction_corners), dtype=bool)
        elig_b = np.ones(len(landmarks.bulk_corners), dtype=bool)

    def corners_hit(corners, eligible):
        hit = set()
        for r in regions:
            for j, cpt in enumerate(corners):
                if not eligible[j]:
                    continue
                d = np.linalg.norm(r.nucleation_sites - cpt, axis=1)
                if np.any(d <= r_corner):
                    hit.add(j)
        return hit

    jc_hit = corners_hit(landmarks.junction_corners, elig_j)
    if len(jc_hit) >= 2:
        return FailureMode.SMALL_PARTICLE, (
            f"nucleation at junction corners {sorted(jc_hit)}")

    bulk_regions = []
    for r in regions:
        d = np.linalg.norm(
            landmarks.bulk_corners[None, :, :] -
            r.nucleation_sites[:, None, :], axis=2)
        if np.any(d <= r_corner):
            bulk_regions.append(r)
    if bulk_regions:
        if geom.double and _spans_both(bulk_regions, landmarks, geom,
                                       r_corner):
            return FailureMode.MACRO_PARTICLE, (
                "bulk-nucleated region spans both asperities")
        return FailureMode.LARGE_PARTICLE, (
            f"{len(bulk_regions)} regions nucleated at bulk corners")

    if len(jc_hit) == 1:
        return FailureMode.MIXED, "single junction-corner nucleation"
    return FailureMode.MIXED, "no rule matched"


def _spans_both(bulk_regions, landmarks: Landmarks, geom: JunctionGeometry,
                slack: float) -> bool:
    """One region covering both junctions' bulk-corner abscissae per side."""
    y_mid = 0.5 * (geom.substrate_ys[0] + geom.substrate_ys[1])
    for r in bulk_regions:
        side_low = r.centroid[1] < y_mid
        xs = [c[0] for c in landmarks.bulk_corners
              if (c[1] < y_mid) == side_low]
        if len(xs) < 2:
            continue
        lo, hi = r.x_extent
        if lo - slack <= min(xs) and hi + slack >= max(xs):
            return True
    return False
