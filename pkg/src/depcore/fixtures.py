"""Built-in looping and recursive programs for the termination suite.

Every program here either diverges concretely or recurses enough that the
abstract engine must cut re-analysis through its function-store summaries;
all of them must reach a stable analysis state within the iteration cap.
"""

from __future__ import annotations

TERMINATION_FIXTURES: tuple = (
    ("countdown", """
        let cell = new(null);
        let _ = cell["f"] = fun(n){ if (n < 1) { 0 } else { cell["f"](n - 1) } };
        cell["f"](3)
    """),
    ("countdown_traced", """
        let cell = new(null);
        let _ = cell["f"] = fun(n){ if (n < 1) { 0 } else { cell["f"](n - 1) } };
        cell["f"](trace(5))
    """),
    ("count_up_forever", """
        let cell = new(null);
        let _ = cell["f"] = fun(n){ cell["f"](n + 1) };
        cell["f"](0)
    """),
    ("self_loop", """
        let cell = new(null);
        let _ = cell["f"] = fun(n){ cell["f"](n) };
        cell["f"](trace(1))
    """),
    ("omega_self_application", """
        let w = fun(g){ g(g) };
        w(w)
    """),
    ("mutual_even_odd", """
        let cells = new(null);
        let _ = cells["even"] = fun(n){ if (n < 1) { true } else { cells["odd"](n - 1) } };
        let _ = cells["odd"] = fun(n){ if (n < 1) { false } else { cells["even"](n - 1) } };
        cells["even"](4)
    """),
    ("string_growth", """
        let cell = new(null);
        let _ = cell["f"] = fun(s){ if (s == "aaaa") { s } else { cell["f"](s + "a") } };
        cell["f"]("")
    """),
    ("heap_write_loop", """
        let cell = new(null);
        let box = new(null);
        let _ = cell["f"] = fun(n){
            let _ = box["last"] = n;
            cell["f"](n + 1)
        };
        cell["f"](0)
    """),
    ("trace_in_loop", """
        let cell = new(null);
        let _ = cell["f"] = fun(n){
            if (n < 1) { trace(0) } else { cell["f"](n - 1) + trace(1) }
        };
        cell["f"](3)
    """),
    ("alternating_branches", """
        let cell = new(null);
        let _ = cell["f"] = fun(n){
            if (n == 0) { cell["f"](1) } else { if (n == 1) { cell["f"](2) } else { n } }
        };
        cell["f"](0)
    """),
    ("untrace_in_loop", """
        let cell = new(null);
        let _ = cell["f"] = fun(n){
            if (n < 1) { untrace(trace(n, "T", "#DOM"), "T" -> "S", "#DOM") }
            else { cell["f"](n - 1) }
        };
        cell["f"](2)
    """),
    ("object_per_iteration", """
        let cell = new(null);
        let _ = cell["f"] = fun(n){
            let o = new(null);
            let _ = o["n"] = n;
            if (n < 1) { o["n"] } else { cell["f"](n - 1) }
        };
        cell["f"](3)
    """),
    ("proto_cycle_reads", """
        let a = new(null);
        let b = new(a);
        let _ = a["p"] = b;
        let cell = new(null);
        let _ = cell["f"] = fun(n){
            if (n < 1) { b["missing"] } else { cell["f"](n - 1) }
        };
        cell["f"](2)
    """),
    ("two_summaries_join", """
        let cell = new(null);
        let _ = cell["f"] = fun(n){ if (n < 2) { n } else { cell["f"](n - 1) } };
        let _ = cell["f"](3);
        cell["f"]("not a number")
    """),
    ("recursion_through_argument", """
        let rec = fun(self){ fun(n){ if (n < 1) { 0 } else { self(self)(n - 1) } } };
        rec(rec)(3)
    """),
    ("stored_closure_chain", """
        let cell = new(null);
        let _ = cell["mk"] = fun(n){ fun(z){ if (n < 1) { z } else { cell["mk"](n - 1)(z) } } };
        cell["mk"](2)(7)
    """),
    ("conditional_self_store", """
        let cell = new(null);
        let _ = cell["f"] = fun(n){
            let _ = if (n == 1) { cell["g"] = cell["f"] } else { 0 };
            if (n < 1) { n } else { cell["f"](n - 1) }
        };
        cell["f"](2)
    """),
    ("loop_with_sanitizer", """
        let cell = new(null);
        let src = fun(z){ trace(z, "T", "#DOM") };
        let _ = cell["f"] = fun(n){
            if (n < 1) { untrace(src(n), "T" -> "S", "#DOM") }
            else { cell["f"](n - 1) }
        };
        cell["f"](4)
    """),
    ("widening_by_key_join", """
        let cell = new(null);
        let box = new(null);
        let _ = cell["f"] = fun(n){
            let _ = box["slot"] = n * 2;
            if (n < 1) { box["slot"] } else { cell["f"](n - 1) }
        };
        cell["f"](3)
    """),
    ("nested_loops", """
        let cell = new(null);
        let _ = cell["inner"] = fun(n){ if (n < 1) { 0 } else { cell["inner"](n - 1) } };
        let _ = cell["outer"] = fun(n){
            if (n < 1) { cell["inner"](2) } else { cell["outer"](n - 1) }
        };
        cell["outer"](2)
    """),
    # A summary that grows after its first use site: the stale hit only
    # re-propagates on the next program round, so this needs three rounds.
    ("late_join_re_propagates", """
        let cell = new(null);
        let _ = cell["g"] = fun(n){ n };
        let h = fun(m){ m };
        let a = cell["g"](1);
        let b = h(a);
        let c = cell["g"](2);
        h(b)
    """),
)
