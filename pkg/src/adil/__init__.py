"""adil: a knowledge-based static debugger for a small C subset.

The pipeline: parse C source into an Ast (`frontend`), lower it to an
annotated flow graph (`flowgraph`), match the graph against a library of
cliche and bug-cliche plans (`planlib`, `matcher`), verify it against the
assignment's specification and localize faults (`debugger`), and render
student-facing explanations (`explain`). `acquire` drafts new plans from
instructor exemplars; `cli` drives everything.
"""

__version__ = "0.1.0"
