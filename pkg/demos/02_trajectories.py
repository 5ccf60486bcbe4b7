# %% [markdown]
# # Trajectories of omega_1 and their time integrals
#
# Traces are parametrized so that omega_1 evaluated on the velocity is
# e^(i theta).  Height and time integral then have closed forms, which the
# numerics reproduce.

# %%
import math
import tempfile
import warnings
from pathlib import Path

import numpy as np

from polyinf import (confinement_measure, contraction_check, field_from_dicts, siegel_passage_audit, time_integral,
                     to_infinity_chart, trace)
from polyinf.trajectory import trajectory_svg

X = field_from_dicts(3, [{(2, 0, 0): 1}, {(0, 2, 0): 1}, {(0, 0, 2): 1}])
chart = to_infinity_chart(X)
tr = trace(chart, (-1, -1), z0=1, theta=0, t_max=20)
print(tr.termination, "T(20) =", tr.end.T, " expected", 1 - math.exp(-20))

# %% [markdown]
# The tail bound certifies how much T can still move.  At t = 10 it is
# e^(-10) for this field, and re-integrating the holonomy along the path
# reproduces the closed-form height.

# %%
short = trace(chart, (-1, -1), theta=0, t_max=10, sample_dt=0.02)
T, tail = time_integral(short)
print("tail bound", tail, "vs e^-10 =", math.exp(-10))
rep = contraction_check(short, chart)
print("height deviation", rep.max_relative_deviation, " halving bound respected:", rep.halving_ok)

# %% [markdown]
# With theta close to pi/2 the trace winds slowly around the Siegel point
# (1, 0) and passes through a small polydisc around it more than once.  Each
# passage costs at most K |z|^(d-1) in time, and the entry heights contract.

# %%
rng = np.random.default_rng(1)
traces = [trace(chart, (1 + 0.05 * np.exp(2j * np.pi * rng.random()), 0.1 * np.exp(2j * np.pi * rng.random())),
                z0=1.0, theta=s * 1.45, t_max=60, sample_dt=0.01) for s in (1, -1, 1, -1, 1, -1)]
audit = siegel_passage_audit(chart, (1, 0), 0.25, traces)
print(len(audit.components), "passages; K =", round(audit.K, 4), " k =", audit.k, " bounds hold:",
      audit.per_component_ok and audit.sum_ok)

# %% [markdown]
# For a complete planar field the time-plane length spent away from the
# singular points at infinity stays bounded: the profile flattens out.

# %%
planar = field_from_dicts(2, [{(2, 1): 1}, {(0, 1): 1, (1, 2): -1}])
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    total, profile = confinement_measure(planar, (0.7 + 0.2j, 1.1 - 0.3j), 0.0, None, 100.0, assume_complete=True)
for L in (10, 25, 50, 100):
    print(f"L = {L:3d}: outside measure {np.interp(L, profile[:, 0], profile[:, 1]):.6f}")

# %% [markdown]
# Traces export as CSV and SVG (path and log|z| panels).

# %%
out = Path(tempfile.mkdtemp()) / "trace.svg"
out.write_text(trajectory_svg(trace(chart, (-1, -1), theta=math.pi / 3, t_max=8), stamp="demo"))
print("wrote", out)
