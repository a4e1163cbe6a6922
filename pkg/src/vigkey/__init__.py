"""Vigenere key-length prediction toolkit.

Classical key-length statistics (index of coincidence, Kasiski distances,
twist-family indices, Matthews H/delta, entropy) feed both standalone
baseline estimators and a feedforward neural-network classifier trained on
generated ciphertext corpora.
"""

__version__ = "0.1.0"
