#!/usr/bin/env python3
"""Generate closed-form C++ for the manufactured flow field used by the
convergence benchmark.

The prescribed field is

  v1 =  sin(t) * sin(pi x)^2 * sin(pi y) * cos(pi y)
  v2 = -sin(t) * sin(pi x) * cos(pi x) * sin(pi y)^2
  p  =  sin(t) * sin(pi x) * cos(pi x) * sin(pi y) * cos(pi y)

which is divergence free and vanishes on the boundary of the unit square.
The body force is derived as f = dv/dt + (v.grad)v - nu*Lap(v) + grad(p),
together with its time derivative df/dt (needed by the Hermite-in-time
data interpolation).  Output goes to src/manufactured_gen.inc.
"""

import sympy as sp

x, y, t, nu = sp.symbols("x y t nu", real=True)
pi = sp.pi

v1 = sp.sin(t) * sp.sin(pi * x) ** 2 * sp.sin(pi * y) * sp.cos(pi * y)
v2 = -sp.sin(t) * sp.sin(pi * x) * sp.cos(pi * x) * sp.sin(pi * y) ** 2
p = sp.sin(t) * sp.sin(pi * x) * sp.cos(pi * x) * sp.sin(pi * y) * sp.cos(pi * y)

# sanity: divergence free, zero trace on the unit-square boundary
assert sp.simplify(sp.diff(v1, x) + sp.diff(v2, y)) == 0
for expr in (v1, v2):
    for sub in ({x: 0}, {x: 1}, {y: 0}, {y: 1}):
        assert sp.simplify(expr.subs(sub)) == 0

def material(u):
    return sp.diff(u, t) + v1 * sp.diff(u, x) + v2 * sp.diff(u, y)

f1 = material(v1) - nu * (sp.diff(v1, x, 2) + sp.diff(v1, y, 2)) + sp.diff(p, x)
f2 = material(v2) - nu * (sp.diff(v2, x, 2) + sp.diff(v2, y, 2)) + sp.diff(p, y)

exprs = {
    "v1": v1,
    "v2": v2,
    "dv1_dt": sp.diff(v1, t),
    "dv2_dt": sp.diff(v2, t),
    "p": p,
    "dp_dt": sp.diff(p, t),
    "f1": f1,
    "f2": f2,
    "df1_dt": sp.diff(f1, t),
    "df2_dt": sp.diff(f2, t),
    "dv1_dx": sp.diff(v1, x),
    "dv1_dy": sp.diff(v1, y),
    "dv2_dx": sp.diff(v2, x),
    "dv2_dy": sp.diff(v2, y),
}

names = list(exprs)
subexprs, reduced = sp.cse([sp.simplify(exprs[n]) for n in names], optimizations="basic")

lines = []
lines.append("// Generated by tools/gen_manufactured.py; do not edit by hand.")
lines.append(f"// Defines the body of manufactured_eval(x, y, t, nu, out[{len(names)}]).")
for sym, sub in subexprs:
    lines.append(f"const double {sym} = {sp.cxxcode(sub)};")
for i, name in enumerate(names):
    lines.append(f"out[{i}] = {sp.cxxcode(reduced[i])};  // {name}")

with open("src/manufactured_gen.inc", "w") as fh:
    fh.write("\n".join(lines) + "\n")

print("wrote src/manufactured_gen.inc with fields:", ", ".join(names))
