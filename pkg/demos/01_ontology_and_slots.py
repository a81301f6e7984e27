"""Slots as branches through stacked concept dimensions.

A slot name like "from.city" is not an opaque label here.  It is the
branch (city, from): one atom per dimension, dimension 1 holding the
base concept and dimension 2 refining it.  Two slots that share an
atom share statistical strength once a tagger factors over dimensions,
and a coarse schema is just the same ontology with the upper
dimensions cut off.
"""

from atomslot.ontology import (
    branch_to_slot,
    build_ontology,
    canonical_slot_name,
    collapse_ontology,
    format_ontology,
    slot_to_branch,
)

ontology = build_ontology(2, [
    ("city", ("city", "null")),
    ("from.city", ("city", "from")),
    ("to.city", ("city", "to")),
    ("day", ("day", "null")),
])

print("slots and their branches (dimension 1 first):")
for slot in ontology.slots:
    print(f"  {slot:<12} {ontology.branches[slot]}")

print("\ndimension vocabularies:")
for dim in ontology.dimensions:
    print(f"  dim {dim.index}: {sorted(dim.atoms)}")

# Lookups work in both directions.
print("\nslot_to_branch('to.city') =", slot_to_branch(ontology, "to.city"))
print("branch_to_slot(('day', 'null')) =", branch_to_slot(ontology, ("day", "null")))

# A branch nobody registered still gets a well-defined name: non-null
# atoms joined highest dimension first.  Decoders rely on this when a
# factored model predicts an unseen combination.
print("unregistered ('day', 'from') =", branch_to_slot(ontology, ("day", "from")))
print("all-null branch =", canonical_slot_name(("null", "null")))

# Cutting dimension 2 merges from.city / to.city / city into one slot.
coarse, mapping = collapse_ontology(ontology, 1)
print("\ncollapsed to 1 dimension:")
print("  slots:", coarse.slots)
print("  mapping:", mapping)

print("\nserialized form (read back with read_ontology):")
print(format_ontology(ontology))
