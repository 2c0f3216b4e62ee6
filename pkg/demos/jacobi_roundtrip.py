"""Moments -> Jacobi matrix -> moments, for the semicircle and the arcsine law."""
from momentforge.measures import Secant, Semicircle, moment_matrix
from momentforge.orthopoly import hankel_from_banded, jacobi_from_moments

for name, model in (("semicircle", Semicircle()), ("secant", Secant())):
    M = moment_matrix(model, 6)
    J = jacobi_from_moments(M)
    print(name)
    print("  a:", [str(a) for a in J.diag])
    print("  b^2:", [str(b) for b in J.beta])
    back = hankel_from_banded(J, 6)
    print("  even moments back:", [str(back.seq[2 * k]) for k in range(7)], "exact match:", back == M)
