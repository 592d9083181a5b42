import json
import random

import pytest

from kxp import (Instance, load_model, model_constraints, save_model,
                 train_boosted, train_decision_list)
from kxp.models import (BoostedEnsemble, DecisionList, Leaf, ModelError,
                        model_from_obj, model_to_obj, _walk)

from util import random_bt, random_dl, random_instance, random_space


def cls_of(model, inst):
    return model.classes[model.classify(inst)]


def test_dl_first_match_semantics(toy_dl, toy_ds, row1):
    assert cls_of(toy_dl, row1) == ">=50k"  # the married-husband rule fires
    sp = toy_dl.space
    dropout = sp.instance_from_labels({
        "Education": "Dropout", "Status": "Married", "Occupation": "Sales",
        "Relationship": "Husband", "Sex": "Male", "Hours/w": "40to45"})
    # the dropout rule wins although the husband rule would match later
    assert cls_of(toy_dl, dropout) == "<50k"
    nobody = sp.instance_from_labels({
        "Education": "HighSchool", "Status": "Separated", "Occupation": "Sales",
        "Relationship": "Unmarried", "Sex": "Male", "Hours/w": "40to45"})
    assert cls_of(toy_dl, nobody) == "<50k"  # default


def test_dl_rule_order_matters(toy_dl, toy_ds):
    sp = toy_dl.space
    swapped = DecisionList(sp, toy_dl.classes,
                           (toy_dl.rules[2], toy_dl.rules[0]) + toy_dl.rules[1:2]
                           + toy_dl.rules[3:], toy_dl.default)
    dropout_husband = sp.instance_from_labels({
        "Education": "Dropout", "Status": "Married", "Occupation": "Sales",
        "Relationship": "Husband", "Sex": "Male", "Hours/w": "40to45"})
    assert cls_of(toy_dl, dropout_husband) == "<50k"
    assert cls_of(swapped, dropout_husband) == ">=50k"


def test_bt_worked_scores(toy_bt, row1):
    assert toy_bt.group_score(0, row1) == 1642
    assert cls_of(toy_bt, row1) == ">=50k"
    sp = toy_bt.space
    vals = list(row1.values)
    vals[sp.feature_index("Occupation")] = sp.value_index(2, "Service")
    pert = Instance(tuple(vals))
    leaves = [_walk(t, pert).weight for t in toy_bt.trees[0]]
    assert leaves == [1063, -2231, -128]
    assert toy_bt.group_score(0, pert) == -1296
    assert cls_of(toy_bt, pert) == "<50k"


def test_bt_zero_score_is_negative_class(toy_bt, row1):
    zeroed = BoostedEnsemble(toy_bt.space, toy_bt.classes, 4,
                             ((Leaf(0),),), positive=0)
    # a zero score does not reach the strictly-positive bar
    assert zeroed.classify(row1) == 1


def test_multiclass_argmax_lowest_tie():
    rng = random.Random(5)
    sp = random_space(rng, min_features=2, max_features=2)
    classes = ("c0", "c1", "c2")
    zero = BoostedEnsemble(sp, classes, 4,
                           ((Leaf(0),), (Leaf(0),), (Leaf(0),)))
    assert zero.classify(random_instance(rng, sp)) == 0
    tied = BoostedEnsemble(sp, classes, 4,
                           ((Leaf(3),), (Leaf(7),), (Leaf(7),)))
    assert tied.classify(random_instance(rng, sp)) == 1


def test_model_validation():
    sp = random_space(random.Random(0), min_features=2, max_features=2)
    with pytest.raises(ModelError):
        DecisionList(sp, ("a",), (), 0)
    with pytest.raises(ModelError):
        DecisionList(sp, ("a", "b"), (), 5)
    with pytest.raises(ModelError):
        BoostedEnsemble(sp, ("a", "b"), 4, ((Leaf(1),), (Leaf(1),)), positive=0)
    with pytest.raises(ModelError):
        BoostedEnsemble(sp, ("a", "b", "c"), 4, ((Leaf(1),),))


def test_model_round_trip_byte_stable(tmp_path, toy_dl, toy_bt, small_dl):
    for name, model in (("dl", toy_dl), ("bt", toy_bt), ("small", small_dl)):
        p1 = tmp_path / (name + "-1.json")
        p2 = tmp_path / (name + "-2.json")
        save_model(model, p1)
        save_model(load_model(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert load_model(p2) == model


def test_model_obj_rejects_junk():
    with pytest.raises(ModelError):
        model_from_obj({"format": "nope"})
    obj = model_to_obj(DecisionList(
        random_space(random.Random(1), min_features=2, max_features=2),
        ("a", "b"), (), 0))
    obj["kind"] = "mystery"
    with pytest.raises(ModelError):
        model_from_obj(obj)


def test_random_model_round_trips():
    rng = random.Random(9)
    for _ in range(30):
        sp = random_space(rng)
        model = random_dl(rng, sp) if rng.random() < 0.5 else random_bt(rng, sp)
        assert model_from_obj(json.loads(json.dumps(model_to_obj(model)))) == model


def test_dl_encoding_shape(toy_dl):
    enc = model_constraints(toy_dl)
    assert enc.kind == "dl"
    assert len(enc.fire) == len(toy_dl.rules)
    assert enc.aux_count == 3 * len(toy_dl.rules)
    challenge = enc.challenge_clause(0)
    # challenging the positive class: some below-50k path must fire
    assert challenge is not None and len(challenge) == 3


def test_bt_exactly_one_leaf_per_tree(toy_bt):
    # the leaf paths of each tree partition the space
    enc = model_constraints(toy_bt)
    per_tree = enc.leaf_paths()
    assert all(len(leaves) == 4 for leaves in per_tree)

    def holds(slit, inst):
        var, value, negated = slit
        return (inst.values[var] != value) if negated \
            else (inst.values[var] == value)

    for inst in toy_bt.space.points():
        for leaves in per_tree:
            active = [w for path, w in leaves
                      if all(holds(sl, inst) for sl in path)]
            assert len(active) == 1


def test_bt_bounds_are_sound(toy_bt):
    rng = random.Random(11)
    enc = model_constraints(toy_bt)
    sp = toy_bt.space
    full = [set(range(len(sp.domain(f)))) for f in range(sp.m)]
    lo, hi = enc.group_bounds(0, full)
    for _ in range(300):
        inst = random_instance(rng, sp)
        assert lo <= toy_bt.group_score(0, inst) <= hi


def test_trainers_produce_valid_models(tmp_path, toy_ds):
    dl = train_decision_list(toy_ds)
    bt = train_boosted(toy_ds, rounds=6)
    insts = toy_ds.instances()
    labels = toy_ds.class_labels
    dl_acc = sum(dl.classify(i) == l for i, l in zip(insts, labels)) / len(insts)
    bt_acc = sum(bt.classify(i) == l for i, l in zip(insts, labels)) / len(insts)
    assert dl_acc >= 0.8 and bt_acc >= 0.8
    save_model(dl, tmp_path / "dl.json")
    save_model(bt, tmp_path / "bt.json")
    assert load_model(tmp_path / "dl.json") == dl
    assert load_model(tmp_path / "bt.json") == bt


def test_fixed_point_matches_float_summation(toy_bt):
    rng = random.Random(3)
    sp = toy_bt.space
    d = toy_bt.scale
    n_trees = len(toy_bt.trees[0])
    for _ in range(200):
        inst = random_instance(rng, sp)
        int_score = toy_bt.group_score(0, inst)
        float_score = sum(_walk(t, inst).weight / 10 ** d for t in toy_bt.trees[0])
        assert abs(int_score / 10 ** d - float_score) <= n_trees * 10 ** -d
        assert (int_score > 0) == (float_score > 1e-12)
