import numpy as np
import pytest

from smoothsum.astkit import AstNode
from smoothsum.corpus import Corpus, Sample, tokenize_code, tokenize_comment
from smoothsum.rng import Rng
from smoothsum.synthetic import generate_samples


def samples_from_records(records):
    return [
        Sample(
            id=r["id"],
            project=r["project"],
            code_tokens=tokenize_code(r["code"]),
            comment_tokens=tokenize_comment(r["comment"]),
            ast_text=r["ast"],
            code_char_len=len(r["code"]),
        )
        for r in records
    ]


@pytest.fixture
def toy_corpus():
    return Corpus(samples_from_records(generate_samples(120, seed=5)))


def random_tree(rng: Rng, max_nodes: int) -> AstNode:
    """Random labelled ordered tree with between 1 and max_nodes nodes."""
    budget = 1 + rng.randint(max_nodes)
    counter = [0]

    def build(remaining: int) -> AstNode:
        counter[0] += 1
        label = f"n{counter[0]}"
        children = []
        spend = remaining - 1
        while spend > 0 and rng.random() < 0.6:
            size = 1 + rng.randint(spend)
            children.append(build(size))
            spend -= size
        return AstNode(label, tuple(children))

    return build(budget)
