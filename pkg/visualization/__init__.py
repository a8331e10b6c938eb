# visualization/__init__.py
