/**
 * Client-side snapshot of the machine's concept DAG.
 *
 * The snapshot is read-only; pending edits are previewed against it but the
 * authoritative hierarchy only changes when the service applies an answered
 * question. Validation mirrors the server rules so an edit list that passes
 * here is accepted by the service.
 */
import type { EditJson, HierarchyJson } from "./schema";

export class DagSnapshot {
  readonly root: string;
  readonly names: Map<string, string>;
  /** child id -> set of parent ids */
  readonly parents: Map<string, Set<string>>;

  constructor(json: HierarchyJson) {
    this.root = json.root;
    this.names = new Map(json.concepts.map((c) => [c.id, c.name]));
    this.parents = new Map(json.concepts.map((c) => [c.id, new Set()]));
    for (const [child, parent] of json.edges) {
      this.parents.get(child)?.add(parent);
    }
  }

  get concepts(): string[] {
    return [...this.names.keys()].sort();
  }

  get edges(): Array<[string, string]> {
    const out: Array<[string, string]> = [];
    for (const [child, ps] of this.parents) {
      for (const p of ps) out.push([child, p]);
    }
    return out.sort();
  }

  has(concept: string): boolean {
    return this.names.has(concept);
  }

  hasEdge(child: string, parent: string): boolean {
    return this.parents.get(child)?.has(parent) ?? false;
  }

  /** All concepts reachable by following child -> parent edges upward. */
  ancestors(concept: string): Set<string> {
    const seen = new Set<string>();
    const stack = [...(this.parents.get(concept) ?? [])];
    while (stack.length > 0) {
      const c = stack.pop()!;
      if (seen.has(c)) continue;
      seen.add(c);
      stack.push(...(this.parents.get(c) ?? []));
    }
    return seen;
  }

  /**
   * Would adding the arrow child -> parent close a directed cycle?
   * True when the parent already sits below the child (or is the child).
   */
  wouldCreateCycle(child: string, parent: string): boolean {
    return child === parent || this.ancestors(parent).has(child);
  }
}

/**
 * Check one edit against the snapshot; returns a human-readable reason when
 * the edit is invalid, or null when it is fine. Matches server validation.
 */
export function validateEdit(dag: DagSnapshot, edit: EditJson): string | null {
  const missing = [edit.concept, edit.child, edit.parent].filter(
    (c): c is string => c !== undefined && !dag.has(c),
  );
  if (missing.length > 0) {
    return `unknown concept ${missing.join(", ")}`;
  }
  switch (edit.kind) {
    case "concept_drift":
      return edit.concept ? null : "drift edit needs a concept";
    case "concept_removal":
      if (!edit.concept) return "removal edit needs a concept";
      return edit.concept === dag.root ? "cannot remove the root" : null;
    case "relation_addition": {
      if (!edit.child || !edit.parent) return "relation edit needs child and parent";
      if (dag.hasEdge(edit.child, edit.parent)) {
        return `${edit.child} -> ${edit.parent} already exists`;
      }
      if (dag.wouldCreateCycle(edit.child, edit.parent)) {
        return `adding ${edit.child} -> ${edit.parent} would close a cycle`;
      }
      return null;
    }
    case "relation_removal": {
      if (!edit.child || !edit.parent) return "relation edit needs child and parent";
      return dag.hasEdge(edit.child, edit.parent)
        ? null
        : `${edit.child} -> ${edit.parent} is not an edge`;
    }
  }
}

/** Deterministic layered layout: root at the top, children below parents. */
export function layout(
  dag: DagSnapshot,
): Array<{ id: string; depth: number; index: number }> {
  const depth = new Map<string, number>([[dag.root, 0]]);
  let frontier = [dag.root];
  while (frontier.length > 0) {
    const next: string[] = [];
    for (const node of frontier) {
      for (const c of dag.concepts) {
        if (dag.parents.get(c)?.has(node)) {
          const d = (depth.get(node) ?? 0) + 1;
          if (d > (depth.get(c) ?? -1)) {
            depth.set(c, d);
            next.push(c);
          }
        }
      }
    }
    frontier = next;
  }
  const byDepth = new Map<number, string[]>();
  for (const c of dag.concepts) {
    const d = depth.get(c) ?? 0;
    byDepth.set(d, [...(byDepth.get(d) ?? []), c]);
  }
  const out: Array<{ id: string; depth: number; index: number }> = [];
  for (const [d, ids] of byDepth) {
    ids.sort().forEach((id, i) => out.push({ id, depth: d, index: i }));
  }
  return out.sort((a, b) => a.depth - b.depth || a.index - b.index);
}
