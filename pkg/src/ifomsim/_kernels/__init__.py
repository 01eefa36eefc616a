"""Hot-loop kernels with a compiled core and a pure-Python fallback.

The compiled module is used when it imports; setting ``IFOMSIM_PURE=1`` in
the environment forces the fallback.  Both produce identical results.
"""

import os

import numpy as np

from . import _pykernels

MAXSEG = _pykernels.MAXSEG
NBINS = _pykernels.NBINS

_compiled = None
if not os.environ.get("IFOMSIM_PURE"):
    try:
        from . import _ckernels as _compiled
    except ImportError:
        _compiled = None


def available() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def get_backend(name: str | None = None):
    """Return the kernel module by name; ``None`` picks the fastest available."""
    if name is None:
        return _compiled if _compiled is not None else _pykernels
    if name == "python":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")


def backend_name(mod=None) -> str:
    mod = get_backend() if mod is None else mod
    return "python" if mod is _pykernels else "cython"


def make_state(n_flows, n_sectors, n_aps, n_users, hist_len=1000, trace_cap=0):
    """Zeroed state arrays shared by the engine and whichever kernel runs."""
    i = np.int64
    f8 = np.float64
    nq = 2 * n_flows
    z = np.zeros
    return {
        "f_start": z(n_flows, i), "f_end": z(n_flows, i), "f_P": z(n_flows, i),
        "f_R": z(n_flows, i), "f_size": z(n_flows, i), "f_hdr": z(n_flows, i),
        "f_pdb": z(n_flows, i), "f_gen": z(n_flows, i), "f_acc_lo": z(n_flows, i),
        "f_acc_hi": z(n_flows, i), "f_iface": np.full(n_flows, -1, i),
        "f_user": z(n_flows, i),
        "s_ontime": z(n_flows, i), "s_late": z(n_flows, i), "s_drop": z(n_flows, i),
        "s_lat_sum": z(n_flows, i), "s_lat_max": z(n_flows, i), "s_hdr": z(n_flows, i),
        "s_epoch_bits": z(n_flows, i), "s_hist": z((n_flows, NBINS), i),
        "e_prb_us": z(n_flows, f8), "e_rx_us": z(n_flows, f8), "e_air_us": z(n_flows, f8),
        "q_seg": z((nq, MAXSEG, 2), i), "q_sh": z(nq, i), "q_sn": z(nq, i),
        "q_sent": z(nq, i), "q_bytes": z(nq, i), "q_phy": z(nq, f8),
        "G": z((n_users, n_sectors), f8), "noise": z(n_users, f8),
        "act": z(n_sectors, i), "sec_cell": z(n_sectors, i),
        "b_ptr": z(n_sectors + 1, i), "b_q": z(0, i), "b_gbr": z(0, i), "b_alloc": z(0, i),
        "u_prbs": z(n_users, i),
        "sec_hist": z((n_sectors, hist_len), i), "sec_prb_meas": z(n_sectors, i),
        "sec_att": z(n_sectors, i), "sec_idle_int": z(n_sectors, f8),
        "sec_idle_unatt": z(n_sectors, f8),
        "w_ptr": z(n_aps + 1, i), "w_q": z(0, i), "ap_att": z(n_aps, i),
        "ap_busy_total": z(n_aps, f8), "ap_busy_meas": z(n_aps, f8),
        "ap_idle_int": z(n_aps, f8), "ap_idle_unatt": z(n_aps, f8),
        "trace_buf": z((trace_cap, 6), i),
    }
