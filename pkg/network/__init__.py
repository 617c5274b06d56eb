"""Dense classifiers, autoencoders and the SGD optimizer."""
