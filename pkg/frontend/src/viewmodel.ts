/**
 * View model for one open drift question.
 *
 * Holds the DAG snapshot, the flagged concepts with their deselect toggles,
 * the witness galleries, and the pending edit list. The machine's proposals
 * arrive pre-populated as removable chips; user actions queue further edits.
 * Every queued edit is validated against the snapshot (plus the edits queued
 * before it), so a submit built here passes server-side validation.
 */
import { DagSnapshot, validateEdit } from "./hierarchy";
import type { AnswerBody } from "./api";
import type { DriftDescriptionJson, EditJson, WitnessPoint } from "./schema";

export interface EditChip {
  edit: EditJson;
  source: "machine" | "user";
}

export interface WitnessGallery {
  concept: string;
  old: WitnessPoint[];
  new: WitnessPoint[];
}

export interface NodeView {
  id: string;
  name: string;
  flagged: boolean;
  deselected: boolean;
  score: number | null;
}

function editLabel(e: EditJson): string {
  if (e.child !== undefined) {
    const arrow = e.kind === "relation_addition" ? "->" : "-/->";
    return `${e.child} ${arrow} ${e.parent}`;
  }
  return `${e.kind === "concept_removal" ? "remove" : "drift"} ${e.concept}`;
}

function sameEdit(a: EditJson, b: EditJson): boolean {
  return (
    a.kind === b.kind &&
    a.concept === b.concept &&
    a.child === b.child &&
    a.parent === b.parent
  );
}

export class QuestionViewModel {
  readonly dag: DagSnapshot;
  readonly iteration: number;
  readonly flagged: string[];
  private readonly scores: Record<string, number>;
  private readonly witnesses: DriftDescriptionJson["witnesses"];
  private deselected = new Set<string>();
  private userEdits: EditJson[] = [];
  private machineEdits: EditJson[];

  constructor(desc: DriftDescriptionJson, hierarchy: ConstructorParameters<typeof DagSnapshot>[0]) {
    this.dag = new DagSnapshot(hierarchy);
    this.iteration = desc.iteration;
    this.flagged = [...desc.flagged].sort();
    this.scores = desc.scores;
    this.witnesses = desc.witnesses;
    this.machineEdits = [...desc.proposed_edits];
  }

  /** Nodes for rendering; flagged ones are highlighted until deselected. */
  nodes(): NodeView[] {
    return this.dag.concepts.map((id) => ({
      id,
      name: this.dag.names.get(id) ?? id,
      flagged: this.flagged.includes(id),
      deselected: this.deselected.has(id),
      score: id in this.scores ? this.scores[id] : null,
    }));
  }

  /** Galleries for flagged concepts that actually have witness examples. */
  galleries(): WitnessGallery[] {
    return Object.entries(this.witnesses)
      .filter(([, w]) => w.old.length > 0 || w.new.length > 0)
      .map(([concept, w]) => ({ concept, old: w.old, new: w.new }))
      .sort((a, b) => a.concept.localeCompare(b.concept));
  }

  chips(): Array<EditChip & { label: string }> {
    return [
      ...this.machineEdits.map((edit) => ({ edit, source: "machine" as const })),
      ...this.userEdits.map((edit) => ({ edit, source: "user" as const })),
    ].map((c) => ({ ...c, label: editLabel(c.edit) }));
  }

  toggleDeselect(concept: string): void {
    if (!this.flagged.includes(concept)) {
      throw new Error(`${concept} is not flagged`);
    }
    if (this.deselected.has(concept)) this.deselected.delete(concept);
    else this.deselected.add(concept);
  }

  dismissChip(edit: EditJson): void {
    this.machineEdits = this.machineEdits.filter((e) => !sameEdit(e, edit));
    this.userEdits = this.userEdits.filter((e) => !sameEdit(e, edit));
  }

  /**
   * Queue a user edit. Returns null on success or the rejection reason;
   * a rejected edit is never queued, which is what blocks cycle-forming
   * arrows before they can reach the service.
   */
  queue(edit: EditJson): string | null {
    const reason = validateEdit(this.dag, edit);
    if (reason !== null) return reason;
    if (this.userEdits.some((e) => sameEdit(e, edit))) {
      return "already queued";
    }
    this.userEdits.push(edit);
    return null;
  }

  addArrow(child: string, parent: string): string | null {
    return this.queue({ kind: "relation_addition", child, parent });
  }

  removeArrow(child: string, parent: string): string | null {
    return this.queue({ kind: "relation_removal", child, parent });
  }

  markRemoved(concept: string): string | null {
    return this.queue({ kind: "concept_removal", concept });
  }

  /** The answer body the submit button POSTs. */
  buildAnswer(): AnswerBody {
    return {
      edits: [...this.userEdits],
      deselected: [...this.deselected].sort(),
    };
  }
}

/** Bounded micro-F1 series for the live sparkline. */
export class Sparkline {
  private points: Array<{ t: number; f1: number }> = [];

  constructor(private readonly capacity = 200) {}

  push(t: number, f1: number): void {
    this.points.push({ t, f1 });
    if (this.points.length > this.capacity) this.points.shift();
  }

  get series(): ReadonlyArray<{ t: number; f1: number }> {
    return this.points;
  }

  /** SVG polyline points, x spread over [0, width], y=0 at f1=1. */
  path(width = 120, height = 30): string {
    if (this.points.length === 0) return "";
    const n = this.points.length;
    return this.points
      .map((p, i) => {
        const x = n === 1 ? 0 : (i / (n - 1)) * width;
        const y = (1 - p.f1) * height;
        return `${x.toFixed(1)},${y.toFixed(1)}`;
      })
      .join(" ");
  }
}
