"""Shared fixtures: a hand-checkable toy taxonomy and toy templates.

The toy tree (root -> A -> {a1, a2}, root -> B -> {b1}) is small enough
that every depth, ancestor set, and similarity value is computed by hand
in the tests that use it.
"""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from semtarget.metrics import ClassTemplates, PredictionRecord
from semtarget.taxonomy import parse_taxonomy

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=50,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


TOY_EDGES = """\
# child<TAB>parent
a1\tA
a2\tA
b1\tB
A\troot
B\troot
"""

TOY_CLASSMAP = """\
class_index,label,node_id
0,first sibling,a1
1,second sibling,a2
2,other branch,b1
"""


@pytest.fixture
def toy_edges() -> str:
    return TOY_EDGES


@pytest.fixture
def toy_classmap() -> str:
    return TOY_CLASSMAP


@pytest.fixture
def toy_taxonomy():
    return parse_taxonomy(TOY_EDGES, TOY_CLASSMAP)


@pytest.fixture
def toy_templates() -> ClassTemplates:
    # Class 1 is deliberately nearer to class 0 than class 2 is, so ranks
    # from template 0 are: self 0, class 1 -> 1, class 2 -> 2.
    return ClassTemplates(
        model_name="toy",
        templates=np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]]),
    )


def make_record(
    gt=0,
    pre=0,
    post=0,
    target=1,
    image_id="img-0",
    attack="fgsm",
    source="toy",
    variant="MS",
) -> PredictionRecord:
    return PredictionRecord(
        image_id=image_id,
        gt_index=gt,
        pre_index=pre,
        post_index=post,
        target_index=target,
        attack=attack,
        source=source,
        variant=variant,
    )
