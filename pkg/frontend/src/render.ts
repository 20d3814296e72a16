/**
 * Plain-string HTML rendering. Kept free of DOM APIs so it is unit-testable;
 * app.ts assigns the output to innerHTML and wires event handlers by id.
 */
import { layout } from "./hierarchy";
import type { QuestionViewModel, WitnessGallery } from "./viewmodel";
import type { WitnessPoint } from "./schema";

const esc = (s: string): string =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

/** One witness instance as a feature bar mini-chart with a label badge. */
export function witnessCard(p: WitnessPoint): string {
  const max = Math.max(1, ...p.x.map((v) => Math.abs(v)));
  const bars = p.x
    .map((v) => {
      const h = Math.round((Math.abs(v) / max) * 24);
      return `<span class="bar${v < 0 ? " neg" : ""}" style="height:${h}px"></span>`;
    })
    .join("");
  const badge = p.y === 1 ? "positive" : "negative";
  return (
    `<figure class="witness" data-example="${p.example_id}">` +
    `<div class="bars">${bars}</div>` +
    `<figcaption><span class="badge ${badge}">${badge}</span> t=${p.t}</figcaption>` +
    `</figure>`
  );
}

export function galleryHtml(g: WitnessGallery): string {
  return (
    `<section class="gallery" data-concept="${esc(g.concept)}">` +
    `<h3>${esc(g.concept)}</h3>` +
    `<div class="col old"><h4>before</h4>${g.old.map(witnessCard).join("")}</div>` +
    `<div class="col new"><h4>now</h4>${g.new.map(witnessCard).join("")}</div>` +
    `</section>`
  );
}

export function dagHtml(vm: QuestionViewModel): string {
  const byId = new Map(vm.nodes().map((n) => [n.id, n]));
  const nodes = layout(vm.dag)
    .map(({ id, depth, index }) => {
      const n = byId.get(id)!;
      const cls = ["node", n.flagged ? "flagged" : "", n.deselected ? "deselected" : ""]
        .filter(Boolean)
        .join(" ");
      const score = n.score === null ? "" : ` title="score ${n.score.toFixed(4)}"`;
      return (
        `<div class="${cls}" data-id="${esc(id)}" data-depth="${depth}" ` +
        `data-index="${index}"${score}>${esc(n.name)}</div>`
      );
    })
    .join("");
  const edges = vm.dag.edges
    .map(([c, p]) => `<div class="edge" data-child="${esc(c)}" data-parent="${esc(p)}"></div>`)
    .join("");
  return `<div class="dag">${nodes}${edges}</div>`;
}

export function chipsHtml(vm: QuestionViewModel): string {
  const chips = vm
    .chips()
    .map(
      (c) =>
        `<li class="chip ${c.source}">${esc(c.label)}` +
        `<button class="dismiss" data-edit='${esc(JSON.stringify(c.edit))}'>x</button></li>`,
    )
    .join("");
  return `<ul class="chips">${chips}</ul>`;
}

export function questionHtml(vm: QuestionViewModel): string {
  const galleries = vm.galleries();
  return (
    `<div class="question" data-iteration="${vm.iteration}">` +
    dagHtml(vm) +
    (galleries.length > 0
      ? `<div class="galleries">${galleries.map(galleryHtml).join("")}</div>`
      : "") +
    chipsHtml(vm) +
    `<button id="submit">submit answer</button>` +
    `</div>`
  );
}

/** Schema mismatch fallback: error banner plus the raw payload. */
export function errorBanner(message: string, raw: unknown): string {
  return (
    `<div class="banner error">${esc(message)}</div>` +
    `<pre class="raw">${esc(JSON.stringify(raw, null, 2))}</pre>`
  );
}
