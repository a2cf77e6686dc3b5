# ferex: facial expression recognition CNN engine
__version__ = "0.1.0"
