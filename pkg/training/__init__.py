"""Clean, adversarial and tangent-aware training loops."""
