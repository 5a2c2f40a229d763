"""Reference values frozen into the C++ tests.

Straight numpy transcriptions of the update formulas on a small fixed
instance, plus a tiny logistic problem. Re-run to regenerate; the printed
literals are pasted into test_updates.cpp / test_objectives.cpp.
"""
import numpy as np

np.set_printoptions(precision=17)

A = np.array([[4.0, 1.0, 0.0, 0.0],
              [1.0, 3.0, 1.0, 0.0],
              [0.0, 1.0, 2.0, 0.5],
              [0.0, 0.0, 0.5, 1.0]])
B = np.array([[1.0, 0.0], [0.5, 1.0], [0.0, 0.5], [1.0, -1.0]])
G = A + B @ B.T
U = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, -1.0]])


def sr_k(g, a, u):
    r = g - a
    return g - r @ u @ np.linalg.pinv(u.T @ r @ u) @ u.T @ r


def bfgs(g, a, u):
    return g - g @ u @ np.linalg.inv(u.T @ g @ u) @ u.T @ g + a @ u @ np.linalg.inv(u.T @ a @ u) @ u.T @ a


def dfp(g, a, u):
    d = g.shape[0]
    p = np.eye(d) - a @ u @ np.linalg.inv(u.T @ a @ u) @ u.T
    return a @ u @ np.linalg.inv(u.T @ a @ u) @ u.T @ a + p @ g @ p.T


def dump(name, m):
    print(f"// {name}")
    for row in np.atleast_2d(m):
        print("  " + ", ".join(repr(float(x)) for x in row) + ",")


dump("G", G)
dump("sr_k(G, A, U)", sr_k(G, A, U))
dump("sr_k(G, A, U[:, :1])", sr_k(G, A, U[:, :1]))
dump("block_bfgs(G, A, U)", bfgs(G, A, U))
dump("block_dfp(G, A, U)", dfp(G, A, U))
dump("inv(block_bfgs(G, A, U))", np.linalg.inv(bfgs(G, A, U)))
dump("inv(block_dfp(G, A, U))", np.linalg.inv(dfp(G, A, U)))
R = np.linalg.cholesky(G)
L = np.linalg.inv(R)
dump("inv(block_bfgs(G, A, L^T U))", np.linalg.inv(bfgs(G, A, L.T @ U)))
print("tau(G, A) =", repr(np.trace(G - A)))
print("sigma(G, A) =", repr(np.trace(np.linalg.solve(A, G - A))))
print("tau(sr_k, A) =", repr(np.trace(sr_k(G, A, U) - A)))
w = np.linalg.eigvals(np.linalg.solve(A, G)).real
print("eta(G, A) =", repr(w.max()), "min", repr(w.min()))

# logistic: rows a_i, labels b_i, gamma
X = np.array([[1.0, 0.0, 2.0], [0.0, -1.0, 0.5], [3.0, 1.0, 0.0], [0.0, 0.0, -1.0]])
b = np.array([1.0, -1.0, -1.0, 1.0])
gamma = 0.1
x = np.array([0.3, -0.2, 0.1])
n = X.shape[0]
z = b * (X @ x)
f = np.mean(np.log1p(np.exp(-z))) + 0.5 * gamma * x @ x
s = 1.0 / (1.0 + np.exp(z))  # sigma(-z)
g = -(X.T @ (b * s)) / n + gamma * x
w = s * (1 - s) / n
H = X.T @ (w[:, None] * X) + gamma * np.eye(3)
print("logistic value =", repr(f))
dump("logistic gradient", g)
dump("logistic hessian", H)
print("logistic L =", repr(np.linalg.eigvalsh(X.T @ X / (4 * n)).max() + gamma))
print("logistic lambda =", repr(np.sqrt(g @ np.linalg.solve(H, g))))
print("ln(1+e^-1)+0.5 =", repr(np.log1p(np.exp(-1.0)) + 0.5))
