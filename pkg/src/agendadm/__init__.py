"""Agenda-based dialogue management with dynamically created dialogue actions.

The engine keeps a workspace of candidate system actions (agendas), grows it
from semantically annotated knowledge snippets, selects the next action with
a deterministic policy, and speaks to the outside world exclusively through
RDF-triple documents.
"""

__version__ = "0.1.0"
