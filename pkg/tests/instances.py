"""Random small client graphs shared by the unit and acceptance tests."""

import numpy as np

from fedrgl.filtering import corrected_lp_init, dual_filter, label_propagate
from fedrgl.graph import masked_lp_normalize, validate_record


def random_instance(seed, n=20):
    rng = np.random.default_rng(seed)
    C = int(rng.integers(2, 5))
    split = np.where(rng.random(n) < 0.6, "train", "test")
    split[0] = "train"
    edges = [[i, j] for i in range(n) for j in range(i + 1, n) if rng.random() < 0.2]
    bundle = validate_record(
        {
            "n_nodes": n,
            "n_classes": C,
            "features": [[0.0]] * n,
            "labels": rng.integers(0, C, n).tolist(),
            "edges": edges,
            "split": split.tolist(),
        }
    )
    logits = rng.normal(scale=2.0, size=(n, C))
    phi1, phi2 = rng.uniform(0, 2, size=2)
    return bundle, logits, float(phi1), float(phi2)


def pipeline(bundle, logits, phi1, phi2, alpha=0.5, k=10):
    train = bundle.train_nodes
    S = masked_lp_normalize(bundle, bundle.train_mask).matrix
    Y0, eq = corrected_lp_init(logits, bundle.labels, train)
    soft = label_propagate(S, Y0, alpha, k, eq)
    return dual_filter(logits, soft, bundle.labels, train, phi1, phi2)
