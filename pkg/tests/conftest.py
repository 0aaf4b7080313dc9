import torch

from docjoint.corpus import Document, EntityCluster, RelationTriple, Span, make_tokens


def make_doc(sentences, clusters=(), relations=(), doc_id="d0"):
    """Document from sentence token lists, cluster span pairs and (h, t, r) ids."""
    cl = tuple(
        EntityCluster(id=str(i), mentions=tuple(Span(a, b) for a, b in ms))
        for i, ms in enumerate(clusters)
    )
    rel = tuple(RelationTriple(head=str(h), tail=str(t), relation=r) for h, t, r in relations)
    return Document(id=doc_id, tokens=make_tokens(sentences), gold_clusters=cl, gold_relations=rel)


def finite_difference_grad(fn, tensor, eps=1e-6):
    """Central-difference gradient of a scalar function w.r.t. one tensor."""
    grad = torch.zeros_like(tensor)
    flat = tensor.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.numel()):
        orig = flat[i].item()
        flat[i] = orig + eps
        f_plus = float(fn())
        flat[i] = orig - eps
        f_minus = float(fn())
        flat[i] = orig
        gflat[i] = (f_plus - f_minus) / (2 * eps)
    return grad


def assert_close_rel(actual, expected, rtol=1e-4, atol=1e-7):
    actual = torch.as_tensor(actual, dtype=torch.float64)
    expected = torch.as_tensor(expected, dtype=torch.float64)
    diff = (actual - expected).abs()
    bound = atol + rtol * torch.maximum(actual.abs(), expected.abs())
    worst = (diff - bound).max()
    assert (diff <= bound).all(), f"max violation {float(worst):.3e} (rtol={rtol}, atol={atol})"
