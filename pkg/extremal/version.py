# CHANGES HERE HAVE NO EFFECT: ../VERSION is the source of truth
__version__ = "0.1.0"
