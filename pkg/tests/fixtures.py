"""Hand-counted evaluation scenarios shared by several test modules."""
from embtrack.boxgeom import BoundingBox

A = BoundingBox(0, 0, 10, 10)
B = BoundingBox(100, 0, 110, 10)
FAR = BoundingBox(300, 300, 310, 310)


def mota_07_frames():
    """Two objects over five frames: 10 gt, 1 miss, 1 false positive, 1 switch.

    frame 1-2  gt1<->h1, gt2<->h2
    frame 3    gt1 unmatched (miss), gt2<->h2
    frame 4    gt1<->h1, gt2<->h3 (h2 gone: switch)
    frame 5    gt1<->h1, gt2<->h3, h4 far away (false positive)
    TP 9, MOTA = (10 - 3) / 10
    """
    gt = {f: [(1, A), (2, B)] for f in range(1, 6)}
    hyp = {
        1: [(1, A), (2, B)],
        2: [(1, A), (2, B)],
        3: [(2, B)],
        4: [(1, A), (3, B)],
        5: [(1, A), (3, B), (4, FAR)],
    }
    return gt, hyp
