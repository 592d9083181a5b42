"""Why and why-not explanations on a six-row income table.

Two small classifiers trained on an adult-census-style table: a decision
list and a three-tree boosted ensemble. For the first row (a married
high-school-educated husband in sales) both predict income >= 50k, and we ask
the two formal questions: which feature values force that prediction (the
abductive explanation), and which features could flip it (the contrastive
ones)?
"""

from pathlib import Path

from kxp import Kind, enumerate_smallest, find_axp, load_csv, load_model

DATA = Path(__file__).parent.parent / "data"

ds = load_csv(DATA / "adult_toy.csv")
dl = load_model(DATA / "adult_toy_dl.json")
bt = load_model(DATA / "adult_toy_bt.json")

row = dl.space.instance_from_labels(ds.row_labels(0))
print("instance:", dl.space.render_instance(row))
print()

for name, model in (("decision list", dl), ("boosted trees", bt)):
    c = model.classify(row)
    print("%s predicts %s" % (name, model.classes[c]))
    if hasattr(model, "group_score"):
        print("  summed score: %d (scale 1e-%d, positive means %s)"
              % (model.group_score(0, row), model.scale, model.classes[0]))

    axp = find_axp(model, row)
    print("  why: fixing {%s} forces the prediction everywhere else in the space"
          % ", ".join(axp.feature_names(model.space)))

    cxps = enumerate_smallest(Kind.CXP, model, row, n=20)
    print("  why not: freeing any one of these flips the prediction:")
    for e in cxps.explanations:
        print("    {%s}" % ", ".join(e.feature_names(model.space)))
    print("  (enumeration proved there are no others: exhausted=%s)"
          % cxps.exhausted)
    print()

print("Both models agree feature-for-feature: the explanation machinery sees")
print("through the representation down to the decision behaviour.")
