from gatefigures.render import render

__all__ = ["render"]
