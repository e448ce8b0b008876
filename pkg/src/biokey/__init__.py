"""biokey: multimodal EEG + keystroke-dynamics biometric engine.

Library layout:

- ``dataio``   file formats, synthetic dataset generation
- ``dsp``      baseline correction, bandpass filtering, segmentation, resampling
- ``features`` time / spectral / wavelet EEG features, keystroke timing features
- ``augment``  jitter, time warping, SMOTE, ADASYN
- ``select``   correlation pruning, forest impurity ranking, top-k sweep
- ``learn``    CART / random forest / KNN / LDA, cross-validation, score fusion
- ``matcher``  binary templates, Hamming matching, CMC and FAR/FRR/EER
- ``pipeline`` glue from a dataset directory to per-modality feature matrices
- ``service``  local HTTP enrollment/authentication service
"""

__version__ = "0.1.0"
