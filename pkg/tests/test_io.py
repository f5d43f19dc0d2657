import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import TSPLIB_DIR
from minplus_tsp.io import (
    FormatError,
    GeneratorSpec,
    InstanceDocument,
    SplitMix64,
    detect_format,
    gen_random,
    load_instance,
    parse_json,
    parse_tsplib,
    write_json,
)
from minplus_tsp.solvers import Instance, InstanceError, held_karp_pull

# Published SplitMix64 outputs for seed 0.
SEED0 = [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]

FULL3 = """NAME: tiny
TYPE: ATSP
DIMENSION: 3
EDGE_WEIGHT_TYPE: EXPLICIT
EDGE_WEIGHT_FORMAT: FULL_MATRIX
EDGE_WEIGHT_SECTION
0 1 2
1 0 3
2 3 0
EOF
"""


def tsplib(body: str, **fields) -> str:
    head = {"NAME": "t", "TYPE": "TSP", **fields}
    return "".join(f"{k}: {v}\n" for k, v in head.items()) + body


# -- TSPLIB -------------------------------------------------------------------


def test_gr17():
    doc = parse_tsplib((TSPLIB_DIR / "gr17.tsp").read_text())
    assert doc.name == "gr17" and doc.n == 17 and doc.source_format == "tsplib"
    c = doc.instance.costs
    assert np.array_equal(c, c.T)
    assert c[1, 0] == 633 and c[16, 15] == 336
    assert held_karp_pull(doc.instance).cost == 2085


def test_full_matrix_echo():
    doc = parse_tsplib(FULL3)
    assert doc.instance.tolist() == [[0, 1, 2], [1, 0, 3], [2, 3, 0]]


def test_triangular_formats_mirror():
    lower = tsplib(
        "EDGE_WEIGHT_SECTION\n0\n4 0\n5 6 0\nEOF\n",
        DIMENSION=3, EDGE_WEIGHT_TYPE="EXPLICIT", EDGE_WEIGHT_FORMAT="LOWER_DIAG_ROW",
    )
    upper = tsplib(
        "EDGE_WEIGHT_SECTION\n4 5\n6\nEOF\n",
        DIMENSION=3, EDGE_WEIGHT_TYPE="EXPLICIT", EDGE_WEIGHT_FORMAT="UPPER_ROW",
    )
    want = [[0, 4, 5], [4, 0, 6], [5, 6, 0]]
    assert parse_tsplib(lower).instance.tolist() == want
    assert parse_tsplib(upper).instance.tolist() == want


def test_euc_2d_rounding():
    text = tsplib(
        "NODE_COORD_SECTION\n1 0 0\n2 3 4\n3 2.5 0\n4 1 1\nEOF\n",
        DIMENSION=4, EDGE_WEIGHT_TYPE="EUC_2D",
    )
    c = parse_tsplib(text).instance.tolist()
    assert c[0][1] == 5
    assert c[0][2] == 3  # 2.5 rounds away from zero
    assert c[0][3] == 1  # sqrt(2)
    assert c[1][3] == 4  # sqrt(13) = 3.61
    assert all(c[i][i] == 0 for i in range(4))
    assert c == [list(r) for r in zip(*c)]


def test_display_section_skipped():
    text = FULL3.replace("EOF\n", "DISPLAY_DATA_SECTION\n1 0 0\n2 1 1\n3 2 2\nEOF\n")
    assert parse_tsplib(text).n == 3


@pytest.mark.parametrize(
    "text",
    [
        tsplib("NODE_COORD_SECTION\n1 0 0\nEOF\n", DIMENSION=1, EDGE_WEIGHT_TYPE="GEO"),
        tsplib("EDGE_WEIGHT_SECTION\n0\nEOF\n", DIMENSION=1, EDGE_WEIGHT_TYPE="EXPLICIT",
               EDGE_WEIGHT_FORMAT="UPPER_DIAG_COL"),
        tsplib("EDGE_WEIGHT_SECTION\n0\nEOF\n", DIMENSION=33, EDGE_WEIGHT_TYPE="EXPLICIT",
               EDGE_WEIGHT_FORMAT="FULL_MATRIX"),
        tsplib("EDGE_WEIGHT_SECTION\n0 1\n1\nEOF\n", DIMENSION=2, EDGE_WEIGHT_TYPE="EXPLICIT",
               EDGE_WEIGHT_FORMAT="FULL_MATRIX"),
        tsplib("EDGE_WEIGHT_SECTION\n0 1.5\n1 0\nEOF\n", DIMENSION=2, EDGE_WEIGHT_TYPE="EXPLICIT",
               EDGE_WEIGHT_FORMAT="FULL_MATRIX"),
        tsplib("EDGE_WEIGHT_SECTION\n0 1\n1 0\nEOF\n", EDGE_WEIGHT_TYPE="EXPLICIT",
               EDGE_WEIGHT_FORMAT="FULL_MATRIX"),
        FULL3.replace("TYPE: ATSP", "TYPE: CVRP"),
        tsplib("EOF\n", DIMENSION=2, EDGE_WEIGHT_TYPE="EXPLICIT", EDGE_WEIGHT_FORMAT="FULL_MATRIX"),
        tsplib("NODE_COORD_SECTION\n1 0 0\n2 x 1\nEOF\n", DIMENSION=2, EDGE_WEIGHT_TYPE="EUC_2D"),
    ],
    ids=["geo", "format", "too-big", "short", "float", "no-dim", "cvrp", "no-section", "bad-coord"],
)
def test_tsplib_rejections(text):
    with pytest.raises(FormatError):
        parse_tsplib(text)


# -- JSON ---------------------------------------------------------------------


def test_json_example():
    doc = parse_json('{"n":2,"costs":[[0,5],[7,0]]}')
    assert doc.instance == Instance([[0, 5], [7, 0]])
    assert doc.name == "" and doc.comment is None


@pytest.mark.parametrize(
    "text",
    [
        '{"n":2,"costs":[[0,5]]}',
        '{"n":2,"costs":[[0,5],[7]]}',
        '{"n":2,"costs":[[0,-5],[7,0]]}',
        '{"n":2,"costs":[[0,9223372036854775808],[7,0]]}',
        '{"n":0,"costs":[]}',
        '{"n":33,"costs":[]}',
        '{"n":2,"costs":[[0,true],[7,0]]}',
        '{"n":2,"costs":[[0,1.0],[7,0]]}',
        '{"costs":[[0]]}',
        "[1, 2]",
        "{not json",
    ],
)
def test_json_rejections(text):
    with pytest.raises(FormatError):
        parse_json(text)


def test_json_round_trip_generated():
    doc = gen_random(GeneratorSpec(8, seed=3))
    text = write_json(doc)
    back = parse_json(text)
    assert back == doc
    assert write_json(back) == text
    json.loads(text)


@given(
    st.integers(1, 6).flatmap(
        lambda n: st.lists(
            st.lists(st.integers(0, 2**63 - 1), min_size=n, max_size=n), min_size=n, max_size=n
        )
    ),
    st.text(max_size=20),
    st.one_of(st.none(), st.text(max_size=20)),
)
def test_json_round_trip_property(costs, name, comment):
    doc = InstanceDocument(name, Instance(costs), comment)
    assert parse_json(write_json(doc)) == doc


# -- generator ----------------------------------------------------------------


def test_splitmix64_reference_vectors():
    rng = SplitMix64(0)
    assert [rng.next() for _ in range(3)] == SEED0


def test_gen_n1():
    assert gen_random(GeneratorSpec(1, seed=99)).instance.tolist() == [[0]]


def test_gen_seed0_symmetric():
    a, b, c = (v % 10 + 1 for v in SEED0)
    want = [[0, a, b], [a, 0, c], [b, c, 0]]
    assert want == [[0, 6, 1], [6, 0, 10], [1, 10, 0]]
    assert gen_random(GeneratorSpec(3, seed=0, max_weight=10, symmetric=True)).instance.tolist() == want


def test_gen_asymmetric_row_major():
    vals = [v % 10 + 1 for v in SEED0]
    c = gen_random(GeneratorSpec(2, seed=0, max_weight=10)).instance.tolist()
    assert c == [[0, vals[0]], [vals[1], 0]]


def test_gen_deterministic_and_seed_sensitive():
    spec = GeneratorSpec(9, seed=123, max_weight=1000, symmetric=True)
    assert write_json(gen_random(spec)) == write_json(gen_random(spec))
    for s in range(100):
        a = gen_random(GeneratorSpec(6, seed=s)).instance
        b = gen_random(GeneratorSpec(6, seed=s + 1000)).instance
        assert a != b


def test_gen_weights_in_range():
    c = gen_random(GeneratorSpec(12, seed=5, max_weight=7)).instance.costs
    off = c[~np.eye(12, dtype=bool)]
    assert off.min() >= 1 and off.max() <= 7
    assert (np.diag(c) == 0).all()


@pytest.mark.parametrize(
    "kwargs", [{"n": 0}, {"n": 33}, {"n": 3, "max_weight": 0}, {"n": 3, "seed": -1}]
)
def test_generator_spec_validation(kwargs):
    with pytest.raises(InstanceError):
        GeneratorSpec(**kwargs)


def test_load_instance(tmp_path):
    assert detect_format("a/gr17.tsp") == "tsplib"
    assert detect_format("x.json") == "json"
    p = tmp_path / "inst.json"
    p.write_text('{"n":2,"costs":[[0,5],[7,0]]}')
    assert load_instance(p).instance.tolist() == [[0, 5], [7, 0]]
    q = tmp_path / "tiny.txt"
    q.write_text(FULL3)
    assert load_instance(q, "tsplib").n == 3
    with pytest.raises(FormatError):
        load_instance(q, "xml")
