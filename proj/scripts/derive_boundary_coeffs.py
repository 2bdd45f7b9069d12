"""Generate src/boundary_coeffs.inc from the strain and vorticity definitions.

Run from the repository root:  python3 scripts/derive_boundary_coeffs.py
"""
import sympy as sp

p1, p2, J = sp.symbols("p1 p2 J", real=True)
u1, u2 = sp.symbols("u1 u2")
# T[i][j] = d_j f^i, i = 0..2 (component), j = 0..1 (horizontal axis)
T = [[sp.Symbol(f"T{i}{j}") for j in range(2)] for i in range(3)]

u3 = p1 * u1 + p2 * u2 - J * (T[0][0] + T[1][1])
dz = [u1, u2, u3]
G = sp.zeros(3, 3)
for i in range(3):
    for k, pk in enumerate((p1, p2)):
        G[i, k] = T[i][k] - pk / J * dz[i]
    G[i, 2] = dz[i] / J
S = (G + G.T) / 2
N = sp.Matrix([-p1, -p2, 1])
n = N / sp.sqrt(1 + p1**2 + p2**2)
X = (S * n).cross(n)
assert sp.simplify(n.dot(X)) == 0

e1 = -J * (X[1] + n[1] / n[2] * X[2])
e2 = J * (X[0] + n[0] / n[2] * X[2])
E = sp.Matrix([e1, e2])
M = E.jacobian([u1, u2]).applyfunc(sp.simplify)
r0 = (-E.subs({u1: 0, u2: 0})).applyfunc(sp.simplify)

M_closed = sp.Matrix([[(1 + p1**2 - p2**2) / 2, p1 * p2], [p1 * p2, (1 - p1**2 + p2**2) / 2]])
assert sp.simplify(M - M_closed) == sp.zeros(2, 2)
detM = sp.factor(M.det())

flat = {p1: 0, p2: 0, J: 1}
assert M.subs(flat) == sp.eye(2) / 2

tsyms = [T[i][j] for i in range(3) for j in range(2)]
lines = [
    "// Generated by scripts/derive_boundary_coeffs.py; do not edit.",
    "// Zero tangential stress written as M (dz f1, dz f2) = R T, T = (d1f1, d2f1, d1f2, d2f2, d1f3, d2f3).",
    "",
]
for a in range(2):
    for b in range(2):
        lines.append(f"const double M{a}{b} = {sp.ccode(sp.simplify(M[a, b]))};")
for a in range(2):
    poly = sp.Poly(sp.expand(r0[a]), *tsyms)
    for k, t in enumerate(tsyms):
        c = sp.simplify(poly.coeff_monomial(t))
        lines.append(f"const double R{a}{k} = {sp.ccode(c)};")
lines.append(f"// det M = {detM}")
open("src/boundary_coeffs.inc", "w").write("\n".join(lines) + "\n")
print("\n".join(lines))
