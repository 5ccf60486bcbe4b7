# %% [markdown]
# # The chart at infinity
#
# A homogeneous quadratic field on C^3 induces a field on the plane z = 1 of
# the hyperplane at infinity, together with the holonomy form
# omega_1 = -H / F dx.  This walk-through builds the chart, finds the
# singular points of the foliation and reads off their residues.

# %%
from polyinf import (classify_singularity, field_from_dicts, find_singularities, numeric_residue, rotate_chart,
                     semicomplete_report, to_infinity_chart)
from polyinf.cli import parse_field_data

X = field_from_dicts(3, [{(2, 0, 0): 1}, {(0, 2, 0): 1}, {(0, 0, 2): 1}])
chart = to_infinity_chart(X)
print("F =", chart.F, "  G =", chart.G, "  H =", chart.H)

# %% [markdown]
# The four singular points are (0,0), (1,0), (0,1), (1,1).  H is the constant
# -1, so each residue is 1 / lambda.

# %%
for p in find_singularities(chart):
    s = classify_singularity(chart, p)
    print(s.location, s.classification, "eigenvalues", s.eigenvalues, "residues", s.residues, s.flow_role)

# %% [markdown]
# The residues can also be measured directly, by integrating omega_1 around a
# loop on an invariant line.  On y = 0 around x = 0 the answer is -1.

# %%
print(numeric_residue(chart, (0.3, 0), 0, 0.3))

# %% [markdown]
# In this chart the leaves are tangent to the line at infinity of the chart
# itself.  A random integer change of coordinates gives a generic chart where
# every leaf crosses it, with residue exactly 1 in the coordinate u = 1/x.

# %%
generic = rotate_chart(X, seed=3)
print("generic:", generic.generic, " residue at the chart's own infinity:",
      numeric_residue(generic, (0.05, 0.3 + 0.1j), 0, 0.05, coord="u"))

# %% [markdown]
# The necessary conditions for semi-completeness hold for this field.  A
# field with a common factor between the chart components shows the factor
# P and a constant foliation.

# %%
for name, status, detail in semicomplete_report(X, chart=chart).verdicts:
    print(f"{name:20s} {status:12s} {detail}")

shared = parse_field_data({"n": 3, "components": ["x**2", "y**2", "x*z + y*z"]})
c3 = to_infinity_chart(shared)
print("P =", c3.P, " a =", c3.a, " b =", c3.b, " H =", c3.H)
