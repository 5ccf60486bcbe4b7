# %% [markdown]
# # Triangle groups and the Poincare series
#
# The leaves of a Halphen field are quotients governed by a triangle group.
# Whether the reduced Poincare series converges along rays of the group
# decides between hyperbolic and parabolic leaves.

# %%
from polyinf import (build_triangle_group, egyptian_enumerate, geodesic_ray, halphen_spectrum_check, leaf_type,
                     poincare_series, verify_relations)
from polyinf.halphen import enumerate_group

for m in [(2, 3, 7), (3, 3, 3), (2, 3, 5)]:
    G = build_triangle_group(*m)
    print(m, G.regime, "max relation deviation", f"{verify_relations(G).max_deviation:.1e}")
print("order of the (2,3,5) group:", len(enumerate_group(build_triangle_group(2, 3, 5))))

# %% [markdown]
# For (2,3,7) the automatic ray selector picks certified geodesic periodic
# words.  The series converges on two different rays, so the leaf is
# hyperbolic.  The alternating word 1,2,1,2,... is a power of an elliptic
# element here, and its orbit stays bounded.

# %%
G = build_triangle_group(2, 3, 7)
w0 = 0.3 + 0.2j
rays = [geodesic_ray(G, sel, J=200, w0=w0) for sel in ("auto", "auto:2", "alt")]
for r in rays:
    rep = poincare_series(G, r)
    print(r.selector, r.word[:6], rep.verdict, f"S_J = {rep.partial_sums[-1]:.6f}", "upper bound:", rep.upper_bound_ok)
print("leaf type:", leaf_type(G, w0, rays[:2]))

# %% [markdown]
# Euclidean orders act by isometries of C, every term equals 1 and the
# leaves are parabolic.

# %%
for m in [(3, 3, 3), (2, 4, 4), (2, 3, 6)]:
    E = build_triangle_group(*m)
    rep = poincare_series(E, geodesic_ray(E, "auto", J=200))
    print(m, rep.verdict, leaf_type(E))

# %% [markdown]
# The admissible orders are tied to egyptian fractions: triples of nonzero
# integers with 1/a + 1/b + 1/c = -1.

# %%
print(egyptian_enumerate(2, 3))
print(len(egyptian_enumerate(2, 10)), "solutions with |x| <= 10")

# %% [markdown]
# Expected spectrum at infinity of a Halphen field with orders (2,3,7).

# %%
for rec in halphen_spectrum_check(2, 3, 7).records:
    print(rec)
