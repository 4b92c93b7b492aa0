/** Browser bootstrap: wires the buttons, the poller, and the render loop. */

import { GatewayClient } from "./gateway.js";
import { render } from "./panels.js";
import { Poller } from "./poller.js";
import { addCommandRow, initialState, selectRobot, setBanner } from "./state.js";

const DEFAULT_GATEWAY = "http://127.0.0.1:8080";

function main(): void {
  const app = document.getElementById("app");
  const controls = document.getElementById("controls");
  if (app === null || controls === null) {
    throw new Error("console markup missing #app / #controls");
  }

  const params = new URLSearchParams(window.location.search);
  const state = initialState(params.get("gateway") ?? DEFAULT_GATEWAY);
  let client = new GatewayClient(state.gatewayUrl);

  const repaint = (): void => {
    app.innerHTML = render(state);
    const select = document.getElementById("robot-select");
    select?.addEventListener("change", (ev) => {
      selectRobot(state, (ev.target as HTMLSelectElement).value);
      repaint();
    });
  };

  const poller = new Poller(state, client, repaint);

  const urlBox = document.createElement("input");
  urlBox.value = state.gatewayUrl;
  urlBox.size = 32;
  urlBox.addEventListener("change", () => {
    state.gatewayUrl = urlBox.value;
    client = new GatewayClient(state.gatewayUrl);
  });
  controls.appendChild(urlBox);

  const button = (label: string, onClick: () => void): void => {
    const el = document.createElement("button");
    el.textContent = label;
    el.addEventListener("click", onClick);
    controls.appendChild(el);
  };

  const send = (code: number, args?: unknown): void => {
    client
      .postCommand(state.selectedRobot, code, args)
      .then((seq) => {
        addCommandRow(state, seq, code);
        repaint();
      })
      .catch((err) => {
        setBanner(state, String(err));
        repaint();
      });
  };

  button("read touch", () => {
    client
      .readTouch(state.selectedRobot)
      .then(({ seq }) => {
        addCommandRow(state, seq, 6);
        repaint();
      })
      .catch((err) => {
        setBanner(state, String(err));
        repaint();
      });
  });
  button("sonar", () => send(4));
  button("temperature", () => send(5));
  button("shake head", () => send(7));
  button("say hello", () => send(3, { text: "hello" }));
  button("LED green", () => send(2, [0, 4095, 0]));
  button("LED off", () => send(2, [0, 0, 0]));
  button("servo 120", () => send(1, 120));

  repaint();
  poller.start();
}

main();
