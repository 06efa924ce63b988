import json
import math
from importlib import resources

import jsonschema
import numpy as np
import pytest

from schmidtkit import io
from schmidtkit.cpmaps import from_kraus
from schmidtkit.exceptions import ValidationError
from schmidtkit.fcs import aklt_spec, evaluate, random_injective_spec
from schmidtkit.itpfi import SchmidtSpectrumSequence as Seq
from schmidtkit.sampling import random_density, random_kraus_unital, random_pure_state
from schmidtkit.states import BipartiteVector, DensityOperator

SCHEMAS = sorted(p.name.split(".")[0] for p in resources.files("schmidtkit").joinpath("schemas").iterdir()
                 if p.name.endswith(".schema.json"))


def roundtrip(obj):
    return json.loads(json.dumps(obj))


def test_schema_set():
    assert SCHEMAS == ["chsh_result", "correlations_input", "cpmap", "error", "fcs_spec", "itpfi_sequence",
                       "itpfi_verdict", "schmidt_record", "state"]


@pytest.mark.parametrize("name", SCHEMAS)
def test_schemas_are_valid(name):
    schema = io.load_schema(name)
    jsonschema.Draft202012Validator.check_schema(schema)
    assert schema["$id"] == f"{name}.schema.json"


def test_state_roundtrip(rng):
    v = random_pure_state(rng, (2, 3))
    doc = roundtrip(io.state_to_json(v))
    io.validate(doc, "state")
    back = io.state_from_json(doc)
    assert isinstance(back, BipartiteVector) and back.dims == (2, 3)
    assert np.allclose(back.amplitudes, v.amplitudes, atol=1e-15)
    rho = DensityOperator(random_density(rng, 6).matrix, (2, 3))
    back = io.state_from_json(roundtrip(io.state_to_json(rho)))
    assert isinstance(back, DensityOperator) and back.dims == (2, 3)
    assert np.allclose(back.matrix, rho.matrix, atol=1e-15)
    single = io.state_from_json({"dims": [2], "re": [0.5, 0, 0, 0.5]})
    assert single.dims == (2,) and single.dim == 2


def test_state_without_imaginary_part():
    v = io.state_from_json({"dims": [2, 2], "re": [0.6, 0, 0, 0.8]})
    assert np.allclose(v.amplitudes, [0.6, 0, 0, 0.8])


def test_state_entry_count_mismatch():
    with pytest.raises(ValidationError):
        io.state_from_json({"dims": [2, 2], "re": [1, 0, 0]})
    with pytest.raises(ValidationError):
        io.state_from_json({"dims": [2, 2], "re": [1, 0, 0, 0], "im": [0, 0]})
    with pytest.raises(jsonschema.ValidationError):
        io.validate({"dims": [2, 2, 2], "re": [1]}, "state")


def test_cpmap_roundtrip(rng):
    t = from_kraus(random_kraus_unital(rng, 2, 3, 2))
    doc = roundtrip(io.cpmap_to_json(t))
    io.validate(doc, "cpmap")
    back = io.cpmap_from_json(doc)
    assert (back.in_dim, back.out_dim) == (2, 3)
    assert np.allclose(back.choi, t.choi, atol=1e-15)


def test_fcs_roundtrip(rng):
    spec = aklt_spec()
    doc = roundtrip(io.fcs_to_json(spec))
    io.validate(doc, "fcs_spec")
    back = io.fcs_from_json(doc)
    ops = [rng.standard_normal((3, 3)) for _ in range(4)]
    assert abs(evaluate(back, ops) - evaluate(spec, ops)) < 1e-14


def test_fcs_from_json_validates():
    doc = io.fcs_to_json(aklt_spec())
    doc["rho_re"] = [0.9, 0, 0, 0.1]
    with pytest.raises(ValidationError):
        io.fcs_from_json(doc)


def test_sequence_roundtrip():
    for seq in (Seq.powers(0.3, 50), Seq.alternating([0.6, 0.4], [0.5, 0.5]), Seq.geometric([0.5, 0.25], 0.5),
                Seq("explicit_list", [[1.0], [0.5, 0.5]]).with_trivial_prefix(2)):
        doc = roundtrip(io.sequence_to_json(seq))
        io.validate(doc, "itpfi_sequence")
        assert io.sequence_from_json(doc) == seq
    with pytest.raises(ValidationError):
        io.sequence_to_json(Seq("generator", generator=lambda k: [1.0]))


def test_round_floats():
    assert io.round_floats(1 / 3) == 0.333333333
    assert io.round_floats(np.float64(2 ** 0.5)) == 1.41421356
    out = io.round_floats(-0.0)
    assert out == 0 and math.copysign(1, out) == 1
    assert io.round_floats({"a": [np.int64(3), True, 1e-20]}) == {"a": [3, True, 1e-20]}
    with pytest.raises(ValidationError):
        io.round_floats(float("nan"))


def test_dumps_is_deterministic():
    a = io.dumps({"b": 1.0, "a": [np.pi, -1e-30]})
    assert a == '{"a":[3.14159265,-1e-30],"b":1.0}\n'
    assert a == io.dumps({"a": [np.pi, -1e-30], "b": 1.0})


def test_rounded_documents_are_accepted(rng):
    v = random_pure_state(rng, (3, 2))
    back = io.state_from_json(json.loads(io.dumps(io.state_to_json(v))))
    assert abs(np.linalg.norm(back.amplitudes) - 1) < 1e-14
    assert np.allclose(back.amplitudes, v.amplitudes, atol=1e-8)
    typed = io.state_from_json({"dims": [2, 2], "re": [0.70710678, 0, 0, 0.70710678]})
    assert abs(np.linalg.norm(typed.amplitudes) - 1) < 1e-14
    rho = io.state_from_json(json.loads(io.dumps(io.state_to_json(random_density(rng, 4)))))
    assert abs(np.trace(rho.matrix) - 1) < 1e-14
    spec = random_injective_spec(rng, 3, 4)
    back = io.fcs_from_json(json.loads(io.dumps(io.fcs_to_json(spec))))
    ops = [rng.standard_normal((3, 3)) for _ in range(3)]
    assert abs(evaluate(back, ops) - evaluate(spec, ops)) < 1e-7


def test_clearly_unnormalized_documents_are_rejected():
    with pytest.raises(ValidationError):
        io.state_from_json({"dims": [2, 2], "re": [1, 0, 0, 1]})
    with pytest.raises(ValidationError):
        io.state_from_json({"dims": [2], "re": [1, 0, 0, 1]})
