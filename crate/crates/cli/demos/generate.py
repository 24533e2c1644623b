"""Writes the demo scripts. Each step carries the whole file content."""
import json
import os

OUT = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(OUT, "..", "tests", "fixtures", "demos")
FILE = "JavadocMethodCheck.java"
CLS = "Zoo/JavadocMethodCheck.java/JavadocMethodCheck/"

BASE = """package checks;

import java.util.Iterator;
import java.util.List;

public class JavadocMethodCheck {
    private boolean allowMissingParamTags = false;

    private void checkComment(List<String> lines, List<String> tags) {
        Iterator<String> it = lines.iterator();
        while (it.hasNext()) {
            String line = it.next();
            if (line.isEmpty()) {
                it.remove();
            }
        }
        Iterator<String> tagIt = tags.iterator();
        while (tagIt.hasNext()) {
            log(tagIt.next());
        }
    }

    private void checkParamTags(List<String> tags, List<String> params, List<String> typeParams) {
        Iterator<String> paramIt = params.iterator();
        while (paramIt.hasNext()) {
            tags.remove(paramIt.next());
        }
        Iterator<String> typeParamsIt = typeParams.iterator();
        while (typeParamsIt.hasNext()) {
            tags.remove("<" + typeParamsIt.next() + ">");
        }
    }

    private void checkReturnTag(List<String> tags, int lineNo) {
        Iterator<String> it = tags.iterator();
        while (it.hasNext()) {
            if (it.next().startsWith("@return")) {
                return;
            }
        }
        log("missing @return at " + lineNo);
    }

    private void checkThrowsTag(List<String> tags, List<String> thrown) {
        Iterator<String> tagIt = tags.iterator();
        while (tagIt.hasNext()) {
            thrown.remove(tagIt.next());
        }
    }

    private void log(String message) {
        System.out.println(message);
    }
}
"""

def sub(src, old, new):
    assert src.count(old) == 1, old
    return src.replace(old, new)

A1 = ("""        Iterator<String> it = lines.iterator();
        while (it.hasNext()) {
            String line = it.next();
            if (line.isEmpty()) {
                it.remove();
            }
        }
""", """        lines.removeIf(line -> line.isEmpty());
""")
B1 = ("""        Iterator<String> tagIt = tags.iterator();
        while (tagIt.hasNext()) {
            log(tagIt.next());
        }
""", """        tags.forEach(this::log);
""")
A2 = ("""        Iterator<String> paramIt = params.iterator();
        while (paramIt.hasNext()) {
            tags.remove(paramIt.next());
        }
""", """        params.forEach(tags::remove);
""")
B2 = ("""        Iterator<String> typeParamsIt = typeParams.iterator();
        while (typeParamsIt.hasNext()) {
            tags.remove("<" + typeParamsIt.next() + ">");
        }
""", """        typeParams.stream().map(p -> "<" + p + ">").forEach(tags::remove);
""")
A3 = ("""        Iterator<String> it = tags.iterator();
        while (it.hasNext()) {
            if (it.next().startsWith("@return")) {
                return;
            }
        }
""", """        if (tags.stream().anyMatch(t -> t.startsWith("@return"))) {
            return;
        }
""")
B3 = ("""        Iterator<String> tagIt = tags.iterator();
        while (tagIt.hasNext()) {
            thrown.remove(tagIt.next());
        }
    }

    private void log""", """        tags.forEach(thrown::remove);
    }

    private void log""")

def apply(src, *edits):
    for old, new in edits:
        src = sub(src, old, new)
    return src

def exp(*pairs):
    return [{"pathId": CLS + m, "severity": s} for m, s in pairs]

steps = [
    {"label": "alice rewrites the first loop in checkComment", "member": "alice", "delayMillis": 0,
     "filePath": FILE, "newContent": apply(BASE, A1),
     "expect": {"alice": [], "bob": exp(("checkComment", "Awareness"))}},
    {"label": "bob rewrites the second loop in checkComment", "member": "bob", "delayMillis": 100,
     "filePath": FILE, "newContent": apply(BASE, B1),
     "expect": {"alice": exp(("checkComment", "Conflict")), "bob": exp(("checkComment", "Conflict"))}},
    {"label": "alice rewrites the paramIt loop", "member": "alice", "delayMillis": 100,
     "filePath": FILE, "newContent": apply(BASE, A1, A2),
     "expect": {"alice": exp(("checkComment", "Conflict")),
                "bob": exp(("checkComment", "Conflict"), ("checkParamTags", "Awareness"))}},
    {"label": "bob rewrites the typeParamsIt loop", "member": "bob", "delayMillis": 100,
     "filePath": FILE, "newContent": apply(BASE, B1, B2),
     "expect": {"alice": exp(("checkComment", "Conflict"), ("checkParamTags", "Conflict")),
                "bob": exp(("checkComment", "Conflict"), ("checkParamTags", "Conflict"))}},
    {"label": "alice rewrites the loop in checkReturnTag", "member": "alice", "delayMillis": 100,
     "filePath": FILE, "newContent": apply(BASE, A1, A2, A3),
     "expect": {"bob": exp(("checkComment", "Conflict"), ("checkParamTags", "Conflict"), ("checkReturnTag", "Awareness"))}},
    {"label": "bob rewrites the loop in checkThrowsTag", "member": "bob", "delayMillis": 100,
     "filePath": FILE, "newContent": apply(BASE, B1, B2, B3),
     "expect": {"alice": exp(("checkComment", "Conflict"), ("checkParamTags", "Conflict"), ("checkThrowsTag", "Awareness"))}},
    {"label": "alice reverts the file", "member": "alice", "delayMillis": 100,
     "filePath": FILE, "newContent": BASE,
     "expect": {"alice": exp(("checkComment", "Awareness"), ("checkParamTags", "Awareness"), ("checkThrowsTag", "Awareness")),
                "bob": []}},
]
pair = {"project": "Zoo", "members": [{"name": "alice", "revision": 3}, {"name": "bob", "revision": 3}],
        "files": {FILE: BASE}, "steps": steps}

disjoint = {"project": "Zoo", "members": [{"name": "alice"}, {"name": "bob"}], "files": {FILE: BASE}, "steps": [
    {"label": "alice edits checkComment", "member": "alice", "delayMillis": 0, "filePath": FILE,
     "newContent": apply(BASE, A1), "expect": {"bob": exp(("checkComment", "Awareness")), "alice": []}},
    {"label": "bob edits checkThrowsTag", "member": "bob", "delayMillis": 50, "filePath": FILE,
     "newContent": apply(BASE, B3),
     "expect": {"alice": exp(("checkThrowsTag", "Awareness")), "bob": exp(("checkComment", "Awareness"))}},
]}

stale = {"project": "Zoo", "members": [{"name": "alice", "revision": 5}, {"name": "bob", "revision": 3}],
         "files": {FILE: BASE}, "steps": [
    {"label": "bob edits on a stale revision", "member": "bob", "delayMillis": 0, "filePath": FILE,
     "newContent": apply(BASE, B1), "expectRejected": ["bob"], "expect": {"alice": []}},
    {"label": "alice edits the same method", "member": "alice", "delayMillis": 50, "filePath": FILE,
     "newContent": apply(BASE, A1), "expect": {"alice": [], "bob": exp(("checkComment", "Conflict"))}},
]}

wrong = {"project": "Zoo", "members": [{"name": "alice"}, {"name": "bob"}], "files": {FILE: BASE}, "steps": [
    {"label": "alice edits checkComment", "member": "alice", "delayMillis": 0, "filePath": FILE,
     "newContent": apply(BASE, A1), "expect": {"bob": exp(("checkComment", "Awareness"))}},
    {"label": "bob edits checkThrowsTag", "member": "bob", "delayMillis": 0, "filePath": FILE,
     "newContent": apply(BASE, B3), "expect": {"alice": exp(("checkThrowsTag", "Conflict"))}},
]}

for name, doc in [("javadoc_pair", pair), ("disjoint", disjoint), ("stale", stale)]:
    with open(os.path.join(OUT, name + ".json"), "w") as f:
        json.dump(doc, f, indent=2); f.write("\n")
os.makedirs(FIXTURES, exist_ok=True)
with open(os.path.join(FIXTURES, "wrong_expectation.json"), "w") as f:
    json.dump(wrong, f, indent=2); f.write("\n")
