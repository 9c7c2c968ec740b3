"""Hot inner loops: synchronous CA steps and bottom-up structure marking.

Each kernel exists twice: a numba @njit version and a pure-numpy fallback.
The backend is chosen once at import time from the TREECCA_BACKEND
environment variable ("numba" or "numpy"); unset means numba when it is
importable, numpy otherwise.  Both paths are exact integer computations and
must produce bit-identical outputs (tests/test_kernels.py asserts this);
benchmarks/kernel_bench.py compares their speed.

All kernels read colors from an input snapshot and write a separate output
buffer, so callers can double-buffer.  Node layout is breadth-first: node 0
is the root, children of node v are the contiguous index range
child_ptr[v]:child_ptr[v+1], and every non-root node has a larger index
than its parent.
"""

from __future__ import annotations

import os

import numpy as np

# Edge predicate codes for the marking DP.
PRED_RIGID = 0          # (child - parent) mod kappa != 1
PRED_STRONGLY_RIGID = 1  # (child - parent) mod kappa not in {1, kappa-1}
PRED_RAINBOW = 2        # (child - parent) mod kappa == 1

_requested = os.environ.get("TREECCA_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ValueError(
        f"TREECCA_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    _HAVE_NUMBA = False

if _requested == "numba" and not _HAVE_NUMBA:  # pragma: no cover
    raise ImportError("TREECCA_BACKEND=numba but numba is not importable")

USE_NUMBA = _HAVE_NUMBA and _requested != "numpy"
ACTIVE_BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _cca_step_numpy(colors, out, parent, child_ptr, kappa, theta):
    n = colors.shape[0]
    # kappa <= 255 and colors < kappa, so colors+1 never wraps uint8
    target = colors + np.uint8(1)
    target[target == kappa] = 0
    counts = np.zeros(n, dtype=np.int64)
    if n > 1:
        par = parent[1:]
        child_match = colors[1:] == target[par]
        counts += np.bincount(par, weights=child_match, minlength=n).astype(np.int64)
        counts[1:] += colors[par] == target[1:]
    np.copyto(out, np.where(counts >= theta, target, colors))
    return out


def _ghm_step_numpy(colors, out, parent, child_ptr, kappa, theta):
    n = colors.shape[0]
    excited = colors == 1
    counts = np.zeros(n, dtype=np.int64)
    if n > 1:
        par = parent[1:]
        counts += np.bincount(par, weights=excited[1:], minlength=n).astype(np.int64)
        counts[1:] += excited[par]
    advanced = colors + np.uint8(1)
    advanced[advanced == kappa] = 0
    woken = np.where(counts >= theta, np.uint8(1), np.uint8(0))
    np.copyto(out, np.where(colors >= 1, advanced, woken))
    return out


def _mark_numpy(colors, marks, parent, level_ptr, kappa, pred_code,
                req_root, req_other, leaf_base):
    depth = level_ptr.shape[0] - 2
    lo_leaf = level_ptr[depth]
    marks[lo_leaf:] = leaf_base[lo_leaf:]
    for s in range(depth - 1, -1, -1):
        lo, hi = level_ptr[s], level_ptr[s + 1]
        clo, chi = level_ptr[s + 1], level_ptr[s + 2]
        par = parent[clo:chi]
        diff = (colors[clo:chi].astype(np.int64) - colors[par]) % kappa
        if pred_code == PRED_RIGID:
            ok = diff != 1
        elif pred_code == PRED_STRONGLY_RIGID:
            ok = (diff != 1) & (diff != kappa - 1)
        else:
            ok = diff == 1
        qual = ok & (marks[clo:chi] != 0)
        counts = np.bincount(par - lo, weights=qual, minlength=hi - lo)
        req = req_root if s == 0 else req_other
        marks[lo:hi] = counts >= req
    return marks


def _changed_count_numpy(a, b):
    return int(np.count_nonzero(a != b))


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _cca_step_numba(colors, out, parent, child_ptr, kappa, theta):
        n = colors.shape[0]
        for v in range(n):
            c = np.int64(colors[v])
            t = c + 1
            if t == kappa:
                t = 0
            cnt = 0
            p = parent[v]
            if p >= 0 and colors[p] == t:
                cnt += 1
            for w in range(child_ptr[v], child_ptr[v + 1]):
                if colors[w] == t:
                    cnt += 1
            if cnt >= theta:
                out[v] = t
            else:
                out[v] = c
        return out

    @numba.njit(cache=True, nogil=True)
    def _ghm_step_numba(colors, out, parent, child_ptr, kappa, theta):
        n = colors.shape[0]
        for v in range(n):
            c = np.int64(colors[v])
            if c >= 1:
                t = c + 1
                if t == kappa:
                    t = 0
                out[v] = t
            else:
                cnt = 0
                p = parent[v]
                if p >= 0 and colors[p] == 1:
                    cnt += 1
                for w in range(child_ptr[v], child_ptr[v + 1]):
                    if colors[w] == 1:
                        cnt += 1
                out[v] = 1 if cnt >= theta else 0
        return out

    @numba.njit(cache=True, nogil=True)
    def _mark_numba(colors, marks, parent, child_ptr, kappa, pred_code,
                    req_root, req_other, leaf_base):
        n = colors.shape[0]
        # children always have larger indices, so one reverse pass suffices
        for v in range(n - 1, -1, -1):
            lo, hi = child_ptr[v], child_ptr[v + 1]
            if lo == hi:
                marks[v] = leaf_base[v]
                continue
            cv = np.int64(colors[v])
            cnt = 0
            for w in range(lo, hi):
                if marks[w] == 0:
                    continue
                diff = (np.int64(colors[w]) - cv) % kappa
                if pred_code == PRED_RIGID:
                    ok = diff != 1
                elif pred_code == PRED_STRONGLY_RIGID:
                    ok = diff != 1 and diff != kappa - 1
                else:
                    ok = diff == 1
                if ok:
                    cnt += 1
            req = req_root if v == 0 else req_other
            marks[v] = 1 if cnt >= req else 0
        return marks

    @numba.njit(cache=True, nogil=True)
    def _changed_count_numba(a, b):
        cnt = 0
        for i in range(a.shape[0]):
            if a[i] != b[i]:
                cnt += 1
        return cnt


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def cca_step_kernel(colors, out, parent, child_ptr, kappa, theta):
    if USE_NUMBA:
        return _cca_step_numba(colors, out, parent, child_ptr,
                               np.int64(kappa), np.int64(theta))
    return _cca_step_numpy(colors, out, parent, child_ptr, kappa, theta)


def ghm_step_kernel(colors, out, parent, child_ptr, kappa, theta):
    if USE_NUMBA:
        return _ghm_step_numba(colors, out, parent, child_ptr,
                               np.int64(kappa), np.int64(theta))
    return _ghm_step_numpy(colors, out, parent, child_ptr, kappa, theta)


def mark_kernel(colors, parent, child_ptr, level_ptr, kappa, pred_code,
                req_root, req_other, leaf_base=None):
    n = colors.shape[0]
    marks = np.empty(n, dtype=np.uint8)
    if leaf_base is None:
        leaf_base = np.ones(n, dtype=np.uint8)
    if USE_NUMBA:
        return _mark_numba(colors, marks, parent, child_ptr, np.int64(kappa),
                           np.int64(pred_code), np.int64(req_root),
                           np.int64(req_other), leaf_base)
    return _mark_numpy(colors, marks, parent, level_ptr, kappa, pred_code,
                       req_root, req_other, leaf_base)


def changed_count(a, b):
    if USE_NUMBA:
        return int(_changed_count_numba(a, b))
    return _changed_count_numpy(a, b)


def warm_up():
    """Trigger JIT compilation of every kernel on a tiny input."""
    colors = np.array([0, 1, 2], dtype=np.uint8)
    out = np.empty_like(colors)
    parent = np.array([-1, 0, 0], dtype=np.int32)
    child_ptr = np.array([1, 3, 3, 3], dtype=np.int64)
    level_ptr = np.array([0, 1, 3], dtype=np.int64)
    cca_step_kernel(colors, out, parent, child_ptr, 3, 2)
    ghm_step_kernel(colors, out, parent, child_ptr, 3, 2)
    mark_kernel(colors, parent, child_ptr, level_ptr, 3, PRED_RIGID, 1, 1)
    changed_count(colors, out)
