/**
 * Versioned payload schemas for the session service API.
 *
 * Every payload read from the wire is validated here before it reaches the
 * view model; a mismatch surfaces as a typed error carrying the raw JSON so
 * the UI can fall back to displaying it verbatim.
 */
import { z } from "zod";

export const SCHEMA_VERSION = 1;

export const HierarchySchema = z.object({
  concepts: z.array(z.object({ id: z.string(), name: z.string() })),
  edges: z.array(z.tuple([z.string(), z.string()])),
  root: z.string(),
});
export type HierarchyJson = z.infer<typeof HierarchySchema>;

export const EditSchema = z.object({
  kind: z.enum([
    "concept_drift",
    "concept_removal",
    "relation_addition",
    "relation_removal",
  ]),
  concept: z.string().optional(),
  child: z.string().optional(),
  parent: z.string().optional(),
});
export type EditJson = z.infer<typeof EditSchema>;

const WitnessPointSchema = z.object({
  x: z.array(z.number()),
  y: z.union([z.literal(0), z.literal(1)]),
  t: z.number().int(),
  example_id: z.number().int(),
});
export type WitnessPoint = z.infer<typeof WitnessPointSchema>;

export const DriftDescriptionSchema = z.object({
  iteration: z.number().int(),
  flagged: z.array(z.string()),
  proposed_edits: z.array(EditSchema),
  scores: z.record(z.number()),
  witnesses: z.record(
    z.object({
      old: z.array(WitnessPointSchema),
      new: z.array(WitnessPointSchema),
    }),
  ),
});
export type DriftDescriptionJson = z.infer<typeof DriftDescriptionSchema>;

const base = { cursor: z.number().int() };

export const EventSchema = z.discriminatedUnion("type", [
  z.object({
    ...base,
    type: z.literal("init"),
    seed: z.number().int(),
    method: z.string(),
    hierarchy: HierarchySchema,
    bandwidth: z.number(),
  }),
  z.object({
    ...base,
    type: z.literal("metric"),
    t: z.number().int(),
    micro_f1: z.number(),
    interactions: z.number().int(),
  }),
  z.object({
    ...base,
    type: z.literal("detection"),
    t: z.number().int(),
    flagged: z.array(z.string()),
    scores: z.record(z.number()),
  }),
  z.object({
    ...base,
    type: z.literal("question"),
    t: z.number().int(),
    description: DriftDescriptionSchema,
  }),
  z.object({
    ...base,
    type: z.literal("answer"),
    t: z.number().int(),
    edits: z.array(EditSchema),
  }),
  z.object({
    ...base,
    type: z.literal("adaptation"),
    t: z.number().int(),
    report: z.unknown(),
  }),
  z.object({ ...base, type: z.literal("finished"), t: z.number().int() }),
]);
export type SessionEvent = z.infer<typeof EventSchema>;

export const PollResponseSchema = z.object({
  events: z.array(EventSchema),
  state: z.enum(["streaming", "paused-at-question", "finished"]),
});
export type PollResponse = z.infer<typeof PollResponseSchema>;

export class SchemaMismatch extends Error {
  constructor(
    message: string,
    public readonly raw: unknown,
  ) {
    super(message);
    this.name = "SchemaMismatch";
  }
}

export function parseEvent(raw: unknown): SessionEvent {
  const result = EventSchema.safeParse(raw);
  if (!result.success) {
    throw new SchemaMismatch(result.error.message, raw);
  }
  return result.data;
}

export function parsePollResponse(raw: unknown): PollResponse {
  const result = PollResponseSchema.safeParse(raw);
  if (!result.success) {
    throw new SchemaMismatch(result.error.message, raw);
  }
  return result.data;
}
