// App shell: session token, tab navigation, view wiring. All state of
// record lives behind the gateway; the page is refresh-safe.

import { GatewayClient } from "./api.js";
import { clear, h } from "./dom.js";
import { emptyDraft } from "./state.js";
import { ComposeView } from "./views/compose.js";
import { DatasetsView } from "./views/datasets.js";
import { LineageView } from "./views/lineage.js";
import { MonitorView } from "./views/monitor.js";

const TOKEN_KEY = "provtrack.token";

export interface App {
  monitor: MonitorView;
  datasets: DatasetsView;
  compose: ComposeView;
  lineage: LineageView;
  showTab(name: string): void;
}

export function mountApp(
  root: HTMLElement,
  client: GatewayClient,
  storage: Storage = sessionStorage,
): App {
  const draft = emptyDraft();
  const lineage = new LineageView(client);
  const monitor = new MonitorView(
    client,
    (node) => {
      void lineage.focus(node);
      showTab("lineage");
    },
    (records) => lineage.provideRecords(records),
  );
  const compose = new ComposeView(client, draft, storage, (detail) => {
    void monitor.refreshList();
    void monitor.watch(detail.id);
    showTab("runs");
  });
  const datasets = new DatasetsView(client, draft, () => compose.refresh());

  const panes: Record<string, HTMLElement> = {
    data: datasets.root,
    compose: compose.root,
    runs: monitor.root,
    lineage: lineage.root,
  };
  const tabs = h("nav", { class: "tabs" },
    ...Object.keys(panes).map((name) =>
      h("button", {
        class: "tab",
        "data-tab": name,
        onclick: () => showTab(name),
      }, name),
    ),
  );
  const body = h("main", {});

  function showTab(name: string): void {
    clear(body);
    const pane = panes[name];
    if (pane) body.append(pane);
    for (const button of tabs.querySelectorAll(".tab")) {
      button.classList.toggle("active", button.getAttribute("data-tab") === name);
    }
  }

  clear(root);
  root.append(h("header", {}, h("h1", {}, "provtrack"), tabs), body);
  showTab("data");
  void monitor.refreshList();
  return { monitor, datasets, compose, lineage, showTab };
}

function mountLogin(root: HTMLElement): void {
  const token = h("input", { id: "token-input", placeholder: "bearer token", size: "24" });
  const status = h("div", { class: "status" });
  const connect = async (): Promise<void> => {
    const client = new GatewayClient("", (token as HTMLInputElement).value.trim());
    try {
      await client.listAnalyses();
      sessionStorage.setItem(TOKEN_KEY, client.token);
      mountApp(root, client);
    } catch {
      status.textContent = "token rejected";
    }
  };
  clear(root);
  root.append(
    h("header", {}, h("h1", {}, "provtrack")),
    h("section", { class: "pane" },
      h("h2", {}, "Sign in"),
      h("div", { class: "row" },
        token,
        h("button", { id: "connect", onclick: () => void connect() }, "Connect"),
      ),
      status,
    ),
  );
}

export function boot(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const saved = sessionStorage.getItem(TOKEN_KEY);
  if (saved) {
    mountApp(root, new GatewayClient("", saved));
  } else {
    mountLogin(root);
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
