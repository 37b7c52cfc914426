// Shared DOM-driving helpers for scripted session tests.

export const flush = async (rounds = 4): Promise<void> => {
  for (let i = 0; i < rounds; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
};

export const sleep = (ms: number): Promise<void> =>
  new Promise((resolve) => setTimeout(resolve, ms));

export function input(selector: string): HTMLInputElement {
  const node = document.querySelector(selector);
  if (!node) throw new Error(`missing ${selector}`);
  return node as HTMLInputElement;
}

export function click(selector: string): void {
  const node = document.querySelector(selector);
  if (!node) throw new Error(`missing ${selector}`);
  (node as HTMLElement).click();
}

export function setValue(
  selector: string,
  value: string,
  event: "input" | "change" = "input",
): void {
  const node = input(selector);
  node.value = value;
  node.dispatchEvent(new Event(event, { bubbles: true }));
}
