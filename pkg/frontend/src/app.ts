/**
 * Browser entry point: wires the poller, the question view model, and the
 * submit flow together. Everything interesting is in the imported modules;
 * this file only touches the DOM.
 */
import { ApiError, EventPoller, SessionClient } from "./api";
import { SchemaMismatch } from "./schema";
import { errorBanner, questionHtml } from "./render";
import { QuestionViewModel, Sparkline } from "./viewmodel";

export async function mount(
  rootEl: HTMLElement,
  baseUrl: string,
  config: Record<string, unknown>,
): Promise<void> {
  const client = new SessionClient(baseUrl);
  const sid = await client.createSession(config);
  const sparkline = new Sparkline();
  const sparkEl = document.createElement("svg");
  rootEl.appendChild(sparkEl);
  const questionEl = document.createElement("div");
  rootEl.appendChild(questionEl);

  let vm: QuestionViewModel | null = null;

  const redraw = (): void => {
    if (vm === null) {
      questionEl.innerHTML = "";
      return;
    }
    questionEl.innerHTML = questionHtml(vm);
    questionEl.querySelectorAll<HTMLElement>(".node.flagged").forEach((el) => {
      el.onclick = () => {
        vm?.toggleDeselect(el.dataset.id!);
        redraw();
      };
    });
    questionEl.querySelectorAll<HTMLButtonElement>(".dismiss").forEach((el) => {
      el.onclick = () => {
        vm?.dismissChip(JSON.parse(el.dataset.edit!));
        redraw();
      };
    });
    const submit = questionEl.querySelector<HTMLButtonElement>("#submit");
    if (submit) submit.onclick = () => void submitAnswer();
  };

  const submitAnswer = async (): Promise<void> => {
    if (vm === null) return;
    try {
      await client.submitAnswer(sid, vm.buildAnswer());
      vm = null;
      redraw();
      await poller.drain();
    } catch (err) {
      if (err instanceof ApiError) {
        // service rejected the edits; keep the question editable
        questionEl.insertAdjacentHTML("afterbegin", errorBanner(err.detail, null));
      } else {
        throw err;
      }
    }
  };

  const poller = new EventPoller(client, sid, {
    onEvent: (event) => {
      if (event.type === "metric") {
        sparkline.push(event.t, event.micro_f1);
        sparkEl.innerHTML = `<polyline points="${sparkline.path()}" />`;
      } else if (event.type === "question") {
        void client.hierarchy(sid).then((h) => {
          vm = new QuestionViewModel(event.description, h);
          redraw();
        });
      }
    },
    onError: (err) => {
      if (err instanceof SchemaMismatch) {
        rootEl.insertAdjacentHTML("afterbegin", errorBanner(err.message, err.raw));
      }
    },
  });

  await poller.drain();
}
