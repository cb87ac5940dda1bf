"""tracelens: control-flow trace packets -> pixel streams -> image tiles -> verdicts.

The pipeline decodes a compact branch-trace wire format (TNT / TIP packet
families plus sync packets), converts packet payloads to a pixel stream,
slices the stream into square image tiles, classifies each tile with a
behavioral model, and averages tile probabilities into a trace verdict.
Baseline classifiers (kNN, Gaussian naive Bayes, random forest, PCA, a
shallow neural network), a local surrogate explainer with heatmap
rendering, a synthetic trace generator, and an evaluation harness round
out the toolkit.
"""

__version__ = "0.1.0"
