"""dictforge: seed-driven construction of NER dictionaries.

The package builds entity dictionaries from an unlabeled corpus and a few
seed examples: lexical patterns propose candidate phrases, a two-view CCA
gives each candidate a low-dimensional embedding, and a small linear
classifier ranks candidates into a dictionary.  A decision-list co-training
baseline, a dictionary-match tagger with span-level evaluation, and a
linear-chain CRF consumer round out the toolkit.
"""

__version__ = "0.1.0"
