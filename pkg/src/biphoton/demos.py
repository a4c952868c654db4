"""Built-in demo scenario documents.

All demos share a 256-point grid with 10 um pitch at 512 nm, for which a
5 cm Fourier system is discretely unitary (wavelength * f = n * dx^2).
"""

from __future__ import annotations

import math

import numpy as np

from .optics import circulant_matrix

N = 256
DX = 1e-5
WL = 5.12e-7
F_FOURIER = 0.05  # WL * F == N * DX**2

# Gaussian source used by the ghost demos: |phi|^2 falls to ~1e-8 at the grid edge.
SOURCE_WAIST = 3e-4
SLIT_SEPARATION = 2e-4
SLIT_WIDTH = 5e-5
GATE_APERTURE = 1e-5  # far-field gating aperture; sets the marginal's coherence width

SAMPLE_SEED = 20260809

# Central three fringes of the slit pattern (fringe period 128 um = 12.8 px):
# excludes the single-slit envelope zeros so visibility reads fringe contrast.
CENTRAL_FRINGES = (108, 148)


def _grid() -> dict:
    return {"n": N, "dx": DX, "center": 0.0}


def _gaussian(waist: float, center: float = 0.0) -> dict:
    return {"profile": "gaussian", "waist": waist, "center": center}


def _mask(profile: dict) -> dict:
    return {"element": "mask", "transmittance": profile}


def _double_slit_mask() -> dict:
    return _mask({"profile": "double_slit", "separation": SLIT_SEPARATION, "width": SLIT_WIDTH})


def _metrics(of: str, region: tuple[int, int] | None = None, label: str | None = None) -> dict:
    d: dict = {"kind": "metrics", "of": of}
    if region is not None:
        d["region"] = list(region)
    if label is not None:
        d["label"] = label
    return d


def _entangled_source() -> dict:
    return {"type": "entangled_delta", "amplitude": _gaussian(SOURCE_WAIST)}


def _matched_correlated_source(waist: float = SOURCE_WAIST) -> dict:
    # gamma(x) = |phi(x)|^2: the gaussian intensity profile needs waist/sqrt(2).
    return {"type": "correlated", "intensity": _gaussian(waist / math.sqrt(2))}


def _ghost_imaging() -> dict:
    return {
        "schema_version": 1,
        "name": "ghost-imaging",
        "description": "Double-slit object in the bucket arm; the coincidence-gated "
                       "scan of the empty arm images the object while its own singles "
                       "rate stays featureless.",
        "grid": _grid(),
        "wavelength": WL,
        "source": _entangled_source(),
        "arm1": [_double_slit_mask()],
        "arm2": [{"element": "identity"}],
        "measurements": [
            {"kind": "singles_2"},
            {"kind": "marginal_2"},
            _metrics("marginal_2", (108, 148)),
            _metrics("singles_2", (108, 148), label="reference"),
        ],
    }


def _ghost_diffraction() -> dict:
    arm1 = [
        _double_slit_mask(),
        {"element": "fourier", "focal_length": F_FOURIER},
        _mask({"profile": "gaussian_aperture", "width": GATE_APERTURE}),
    ]
    arm2 = [{"element": "fourier", "focal_length": F_FOURIER}]
    return {
        "schema_version": 1,
        "name": "ghost-diffraction",
        "description": "Double slit gated through a narrow far-field aperture: the "
                       "entangled source shows high-visibility fringes in the gated "
                       "marginal of the empty arm, the intensity-matched correlated "
                       "source shows none.",
        "grid": _grid(),
        "wavelength": WL,
        "arm1": arm1,
        "arm2": arm2,
        "variants": [
            {"label": "entangled", "source": _entangled_source()},
            {"label": "correlated", "source": _matched_correlated_source()},
        ],
        "measurements": [
            {"kind": "joint"},
            {"kind": "singles_2"},
            {"kind": "marginal_2"},
            _metrics("marginal_2", CENTRAL_FRINGES),
            {"kind": "sample", "n": 1_000_000, "seed": SAMPLE_SEED},
        ],
    }


def _factorizable_null() -> dict:
    return {
        "schema_version": 1,
        "name": "factorizable-null",
        "description": "Independent-photon source: the gated marginal equals the "
                       "singles rate in both arms, so gating transfers no information.",
        "grid": _grid(),
        "wavelength": WL,
        "source": {
            "type": "factorizable",
            "amplitude1": _gaussian(3e-4, -5e-5),
            "amplitude2": _gaussian(2e-4, 5e-5),
        },
        "arm1": [_double_slit_mask(), {"element": "free_space", "distance": 0.05}],
        "arm2": [{"element": "thin_lens", "focal_length": 0.1},
                 {"element": "free_space", "distance": 0.07}],
        "measurements": [
            {"kind": "joint"},
            {"kind": "singles_1"},
            {"kind": "singles_2"},
            {"kind": "marginal_1"},
            {"kind": "marginal_2"},
        ],
    }


def _isoplanatic_correlated() -> dict:
    # Lossy but shift-invariant (circulant) gating arm: per-point throughput is
    # constant, so the gated marginal collapses to the singles exactly.
    k = np.arange(N)
    d = np.minimum(k, N - k) * DX
    col = np.exp(-(d**2) / (2 * (5e-5) ** 2))
    col = 0.8 * col / (col.sum() * DX)
    matrix = circulant_matrix(col).real
    return {
        "schema_version": 1,
        "name": "isoplanatic-correlated",
        "description": "Correlated source gated through a shift-invariant blur: "
                       "bucket gating leaves the observed singles unchanged.",
        "grid": _grid(),
        "wavelength": WL,
        "source": _matched_correlated_source(),
        "arm1": [{"element": "custom", "matrix": matrix.tolist()}],
        "arm2": [{"element": "free_space", "distance": 0.05}],
        "measurements": [
            {"kind": "singles_2"},
            {"kind": "marginal_2"},
        ],
    }


SPDC_WIDTHS = [6.4e-4, 1.6e-4, 4e-5, 1e-5, 2.5e-6, 6.25e-7]


def _spdc_label(b: float) -> str:
    return f"b{b * 1e6:g}um"


def _spdc_sweep() -> dict:
    variants = [{"label": "delta", "source": _entangled_source()}]
    for b in SPDC_WIDTHS:
        variants.append({
            "label": _spdc_label(b),
            "source": {"type": "spdc", "pump": _gaussian(SOURCE_WAIST), "pm_width": b},
        })
    return {
        "schema_version": 1,
        "name": "spdc-sweep",
        "description": "Geometric sweep of the phase-matching width toward the "
                       "ideal entangled limit: Schmidt number grows and the gated "
                       "fringes converge to the delta-source pattern.",
        "grid": _grid(),
        "wavelength": WL,
        "arm1": [
            _double_slit_mask(),
            {"element": "fourier", "focal_length": F_FOURIER},
            _mask({"profile": "gaussian_aperture", "width": GATE_APERTURE}),
        ],
        "arm2": [{"element": "fourier", "focal_length": F_FOURIER}],
        "variants": variants,
        "measurements": [
            {"kind": "schmidt"},
            {"kind": "singles_2"},
            {"kind": "marginal_2"},
            _metrics("marginal_2", CENTRAL_FRINGES),
        ],
    }


# Refocus geometry: two dark-field point scatterers at depths 4 cm and 28 cm
# inside the bucket arm; the reference arm (8 cm, lens, pupil, 12 cm) can be
# focused onto either scattering plane by the lens choice.
REFOCUS = {
    "z_a": 0.04, "z_b": 0.28, "x_a": -2e-4, "x_b": 2e-4,
    "s1": 0.08, "s2": 0.12, "f_plane_a": 0.06, "f_plane_b": 0.09,
    "pupil": 4e-4, "source_waist": float(2e-4 * math.sqrt(2)),
}


def _refocus_arm2(focal_length: float) -> list[dict]:
    r = REFOCUS
    return [
        {"element": "free_space", "distance": r["s1"]},
        {"element": "thin_lens", "focal_length": focal_length},
        _mask({"profile": "gaussian_aperture", "width": r["pupil"]}),
        {"element": "free_space", "distance": r["s2"]},
    ]


def _refocus() -> dict:
    r = REFOCUS
    ent = {"type": "entangled_delta", "amplitude": _gaussian(r["source_waist"])}
    corr = {"type": "correlated", "intensity": _gaussian(r["source_waist"] / math.sqrt(2))}
    return {
        "schema_version": 1,
        "name": "refocus",
        "description": "Two point scatterers at different depths in the bucket arm: "
                       "with the entangled source the reference-arm lens refocuses "
                       "each plane to the diffraction limit; the correlated source "
                       "only ever yields a defocused incoherent image.",
        "grid": _grid(),
        "wavelength": WL,
        "arm1": [
            {"element": "free_space", "distance": r["z_a"]},
            {"element": "free_space", "distance": r["z_b"] - r["z_a"]},
            {"element": "free_space", "distance": 1.0 - r["z_b"]},
        ],
        "scatterers": {
            "arm": 1,
            "background": "dark",
            "items": [
                {"plane": 1, "position": r["x_a"], "strength": 0.05},
                {"plane": 2, "position": r["x_b"], "strength": 0.05},
            ],
        },
        "variants": [
            {"label": "entangled-planeA", "source": ent, "arm2": _refocus_arm2(r["f_plane_a"])},
            {"label": "entangled-planeB", "source": ent, "arm2": _refocus_arm2(r["f_plane_b"])},
            {"label": "correlated-planeA", "source": corr, "arm2": _refocus_arm2(r["f_plane_a"])},
        ],
        "measurements": [
            {"kind": "singles_2"},
            {"kind": "marginal_2"},
            _metrics("marginal_2", (138, 158), label="planeA"),
            _metrics("marginal_2", (111, 128), label="planeB"),
            _metrics("marginal_2", (0, 256), label="full"),
        ],
    }


def demo_documents() -> dict[str, dict]:
    docs = [
        _ghost_imaging(),
        _ghost_diffraction(),
        _factorizable_null(),
        _isoplanatic_correlated(),
        _spdc_sweep(),
        _refocus(),
    ]
    return {d["name"]: d for d in docs}
