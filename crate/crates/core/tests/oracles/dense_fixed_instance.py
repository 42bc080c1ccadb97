"""Dense reference for the fixed 4x2 enforcement instance.

Forms the full n x n cross product explicitly, takes a full SVD with numpy,
masks zero singular values and evaluates S_hat = U I V^T (Oc N) + T.
The synthetic table is the seed-7 standard-normal draw printed by
`make_test_dataset(4, 2, I, 7)`; its values are copied here verbatim.
"""
import numpy as np

O = np.array([[1.0, 2.0], [2.0, 1.0], [3.0, 5.0], [4.0, 4.0]])
S = np.array([
    [-2.3943275547436884, -0.3165612653703355],
    [0.09882773911395246, -1.092068532858473],
    [1.3010753864547346, -1.885046191638772],
    [-0.22026415682703815, -1.2010816183476256],
])
n = O.shape[0]
D = np.full((n, n), 1.0 / n)
I = np.eye(n)
Oc = (I - D) @ O
Sc = (I - D) @ S
mu = O.mean(axis=0)
var = O.var(axis=0)
N = np.diag(np.sqrt(var) * np.sqrt(n) / np.linalg.norm(Oc, axis=0))
A = Oc @ N
U, sig, Vt = np.linalg.svd(Sc @ A.T)
mask = np.diag((sig > 1e-12 * sig[0]).astype(float))
S_hat = U @ mask @ Vt @ A + np.outer(np.ones(n), mu)
for row in S_hat:
    print(", ".join(repr(float(v)) for v in row))
