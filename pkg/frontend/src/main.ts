// Entry point: a small login form, then the coder or supervisor app.
// The UI is served by the coding service itself (under /ui), so the
// default API base is the page's own origin.

import { CodingApi } from "./api";
import { App } from "./app";

const root = document.querySelector<HTMLElement>("#app");
if (!root) throw new Error("missing #app mount point");

function loginForm(): string {
  return `
    <form id="login" class="login">
      <h1>Lesson coding</h1>
      <label>service URL
        <input name="base" type="text" placeholder="same origin" value="">
      </label>
      <label>session id
        <input name="session" type="text" required>
      </label>
      <label>coder id
        <input name="coder" type="text" required>
      </label>
      <label>role
        <select name="role">
          <option value="coder" selected>coder</option>
          <option value="supervisor">supervisor</option>
        </select>
      </label>
      <label>auth token (optional)
        <input name="token" type="password" value="">
      </label>
      <button type="submit">Start</button>
    </form>`;
}

let app: App | null = null;

function showLogin(): void {
  app?.dispose();
  app = null;
  root!.innerHTML = loginForm();
  const form = root!.querySelector<HTMLFormElement>("#login");
  form?.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const read = (name: string) => String(data.get(name) ?? "").trim();
    const api = new CodingApi({
      baseUrl: read("base"),
      token: read("token") || undefined,
    });
    const role = read("role") === "supervisor" ? "supervisor" : "coder";
    root!.innerHTML = "";
    app = new App({
      api,
      sessionId: read("session"),
      coder: read("coder"),
      role,
      mount: root!,
      win: window,
    });
    void app.start();
  });
}

showLogin();
