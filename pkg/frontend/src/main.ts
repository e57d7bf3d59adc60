/** Browser entry point: render loop plus one delegated event listener. */

import { MergeServiceClient } from "./api.js";
import { SessionController, parseDirectFields } from "./controller.js";
import { renderApp } from "./render.js";
import { withError } from "./state.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}

const client = new MergeServiceClient("");
const controller = new SessionController(client, (state) => {
  root.innerHTML = renderApp(state);
});
root.innerHTML = renderApp(controller.state);

function download(filename: string, text: string): void {
  const link = document.createElement("a");
  link.href = URL.createObjectURL(new Blob([text], { type: "text/plain" }));
  link.download = filename;
  link.click();
  URL.revokeObjectURL(link.href);
}

root.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest("[data-action]");
  if (!(target instanceof HTMLElement) || target instanceof HTMLFormElement) {
    return;
  }
  const action = target.dataset.action;
  if (action === "toggle") {
    controller.toggle(target.dataset.key ?? "");
  } else if (action === "accept") {
    void controller.acceptSuggestion(Number(target.dataset.index));
  } else if (action === "dismiss") {
    void controller.dismissSuggestion(Number(target.dataset.index));
  } else if (action === "resolve") {
    void controller.resolveConflict(
      Number(target.dataset.conflict),
      Number(target.dataset.resolution),
    );
  } else if (action === "undo") {
    void controller.undo();
  } else if (action === "export-canonical" || action === "export-owl") {
    const format = action === "export-canonical" ? "canonical" : "owl";
    void controller.exportText(format).then((text) => {
      if (text !== null) {
        download(`merged.${format === "owl" ? "owl" : "txt"}`, text);
      }
    });
  }
});

root.addEventListener("change", (event) => {
  const target = event.target as HTMLElement;
  if (target instanceof HTMLSelectElement && target.dataset.action === "preferred") {
    void controller.setPreferred(target.value || null);
  }
});

root.addEventListener("submit", (event) => {
  const form = event.target as HTMLFormElement;
  event.preventDefault();
  if (form.dataset.action === "load-sources") {
    const input = form.querySelector<HTMLInputElement>("input[type=file]");
    const files = input?.files;
    if (!files || files.length < 2) {
      controller.state = withError(controller.state, "pick at least two source files");
      root.innerHTML = renderApp(controller.state);
      return;
    }
    void Promise.all(
      Array.from(files).map(async (file) => ({
        name: file.name,
        content: await file.text(),
      })),
    ).then((sources) => controller.loadSources(sources));
  } else if (form.dataset.action === "direct") {
    const data = new FormData(form);
    try {
      const op = parseDirectFields(
        String(data.get("type") ?? ""),
        String(data.get("fields") ?? ""),
      );
      void controller.apply(op);
    } catch (error) {
      controller.state = withError(controller.state, String(error));
      root.innerHTML = renderApp(controller.state);
    }
  }
});
