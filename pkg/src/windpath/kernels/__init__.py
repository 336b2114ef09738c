"""Hot-kernel backend selection.

The compiled extension is preferred; the pure-Python module is a drop-in
fallback. Set WINDPATH_PURE_PY=1 to force the fallback (used by the
benchmark and the backend-equivalence tests).
"""

import os

if os.environ.get("WINDPATH_PURE_PY"):
    from . import _core_py as impl
else:
    try:
        from . import _core as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _core_py as impl

BACKEND = impl.BACKEND
trilinear_sample = impl.trilinear_sample
ray_distances = impl.ray_distances
energy_rate = impl.energy_rate
move_energy = impl.move_energy
segment_airspeed = impl.segment_airspeed
mlp2_forward = impl.mlp2_forward

__all__ = [
    "BACKEND",
    "trilinear_sample",
    "ray_distances",
    "energy_rate",
    "move_energy",
    "segment_airspeed",
    "mlp2_forward",
    "impl",
]
