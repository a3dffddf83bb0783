"""Independent reference implementations used by the tests.

Everything here is written with plain Python loops and the ``math`` module so
that it shares no code path with the package under test.
"""

import math


def softmax_row(row):
    m = max(row)
    e = [math.exp(x - m) for x in row]
    s = sum(e)
    return [x / s for x in e]


def safe_log(x, floor=1e-12):
    return math.log(max(x, floor))


def matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def add_bias(A, b):
    return [[x + b[j] for j, x in enumerate(row)] for row in A]


def relu(A):
    return [[max(x, 0.0) for x in row] for row in A]


def to_lists(a):
    return [[float(x) for x in row] for row in a]


def gcn_forward(A_hat, X, params):
    """H = A relu(A X W1 + b1) W2 + b2, logits = H Wc + bc."""
    p = {k: to_lists(v) for k, v in params.items()}
    A = to_lists(A_hat)
    h = relu(add_bias(matmul(A, matmul(to_lists(X), p["enc_w1"])), p["enc_b1"][0]))
    H = add_bias(matmul(A, matmul(h, p["enc_w2"])), p["enc_b2"][0])
    logits = add_bias(matmul(H, p["cls_w"]), p["cls_b"][0])
    Z = add_bias(matmul(relu(add_bias(matmul(H, p["proj_w1"]), p["proj_b1"][0])), p["proj_w2"]), p["proj_b2"][0])
    return H, logits, Z


# --- filtering --------------------------------------------------------------


def class_stats(losses, labels, phi):
    out = {}
    for c in sorted(set(labels)):
        vals = [l for l, y in zip(losses, labels) if y == c]
        mean = sum(vals) / len(vals)
        var = sum((v - mean) ** 2 for v in vals) / len(vals)
        std = math.sqrt(var)
        out[c] = (len(vals), mean, std, mean + phi * std)
    return out


def keep_by_threshold(nodes, losses, labels, stats):
    kept = set()
    for v, l, y in zip(nodes, losses, labels):
        count, _, std, thr = stats[y]
        if count <= 1 or std <= 1e-12 or l < thr:
            kept.add(v)
    return kept


def masked_lp_matrix(n, edges, train):
    train = set(train)
    adj = [[0.0] * n for _ in range(n)]
    for u, v in edges:
        if u in train and v in train:
            adj[u][v] = adj[v][u] = 1.0
    deg = [sum(r) for r in adj]
    return [
        [adj[i][j] / math.sqrt(deg[i] * deg[j]) if adj[i][j] else 0.0 for j in range(n)]
        for i in range(n)
    ]


def lp_oracle(S, Y0, alpha, k, clamp):
    n, C = len(Y0), len(Y0[0])
    Y = [row[:] for row in Y0]
    for _ in range(k):
        new = []
        for i in range(n):
            new.append([alpha * Y[i][c] + (1 - alpha) * sum(S[i][j] * Y[j][c] for j in range(n)) for c in range(C)])
        for i in clamp:
            new[i] = Y0[i][:]
        Y = new
    out = []
    for row in Y:
        s = sum(row)
        out.append([x / s for x in row] if s > 0 else [0.0] * C)
    return out


def brute_filter(logits, labels, train, edges, phi1, phi2, alpha, k, clamp=True):
    """Both views of the noisy-node filter, from global logits and the graph."""
    n, C = len(logits), len(logits[0])
    train = sorted(int(v) for v in train)
    probs = {v: softmax_row([float(x) for x in logits[v]]) for v in train}
    y = [int(labels[v]) for v in train]

    ce_global = [-safe_log(probs[v][labels[v]]) for v in train]
    g_stats = class_stats(ce_global, y, phi1)
    c1 = keep_by_threshold(train, ce_global, y, g_stats)

    Y0 = [[0.0] * C for _ in range(n)]
    eq = []
    for v in train:
        best = max(range(C), key=lambda c: (probs[v][c], -c))
        if best == labels[v]:
            Y0[v] = [1.0 if c == labels[v] else 0.0 for c in range(C)]
            eq.append(v)
        else:
            Y0[v] = probs[v][:]
    S = masked_lp_matrix(n, [tuple(map(int, e)) for e in edges], train)
    soft = lp_oracle(S, Y0, alpha, k, eq if clamp else [])
    ce_struct = [-safe_log(soft[v][labels[v]]) for v in train]
    s_stats = class_stats(ce_struct, y, phi2)
    c2 = keep_by_threshold(train, ce_struct, y, s_stats)

    clean = c1 & c2
    return {
        "clean_global": c1,
        "clean_structural": c2,
        "clean": clean,
        "noisy": set(train) - clean,
        "global_stats": g_stats,
        "structural_stats": s_stats,
        "soft": soft,
    }


# --- contrastive and consistency losses -------------------------------------


def cosine(a, b):
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    return sum(x * y for x, y in zip(a, b)) / (na * nb)


def infonce_side(Z1, Z2, tau):
    n = len(Z1)
    total = 0.0
    for i in range(n):
        pos = math.exp(cosine(Z1[i], Z2[i]) / tau)
        denom = sum(math.exp(cosine(Z1[i], Z2[j]) / tau) for j in range(n))
        denom += sum(math.exp(cosine(Z1[i], Z1[j]) / tau) for j in range(n) if j != i)
        total += -math.log(pos / denom)
    return total / n


def contrastive_oracle(Z1, Z2, tau):
    Z1, Z2 = to_lists(Z1), to_lists(Z2)
    return 0.5 * (infonce_side(Z1, Z2, tau) + infonce_side(Z2, Z1, tau))


def kl(p, q):
    return sum(a * (safe_log(a) - safe_log(b)) for a, b in zip(p, q))


def js3_oracle(P0, P1, P2, rows):
    total = 0.0
    for r in rows:
        ps = [list(map(float, P[r])) for P in (P0, P1, P2)]
        m = [(a + b + c) / 3 for a, b, c in zip(*ps)]
        total += sum(kl(p, m) for p in ps) / 3
    return total / len(rows)


def entropy_oracle(probs, n_classes):
    rows = [list(map(float, r)) for r in probs]
    return sum(-sum(p * safe_log(p) for p in r) / n_classes for r in rows) / len(rows)
