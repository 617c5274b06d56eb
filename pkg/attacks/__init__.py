"""this is the attacks app's __init__.py file."""
